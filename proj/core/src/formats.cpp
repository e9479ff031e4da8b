#include "sketchanim/formats.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sketchanim/error.hpp"

namespace sketchanim {

using nlohmann::json;

namespace {

json point_json(const Point3& p) { return json::array({p.x, p.y, p.z}); }

Point3 point_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3 || !j[0].is_number() ||
      !j[1].is_number() || !j[2].is_number()) {
    throw IoError(std::string(what) + " must be [x, y, z]");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json sketch_json(const Sketch3D& sketch) {
  json curves = json::array();
  for (const auto& c : sketch.curves) {
    json pts = json::array();
    for (const auto& p : c.control) pts.push_back(point_json(p));
    curves.push_back(std::move(pts));
  }
  return json{{"version", 1},
              {"prompt", sketch.prompt},
              {"seed", sketch.seed},
              {"curves", std::move(curves)}};
}

Sketch3D sketch_from(const json& j) {
  if (!j.is_object() || j.value("version", 0) != 1) {
    throw IoError("sketch file must be an object with version 1");
  }
  if (!j.contains("curves") || !j["curves"].is_array() || j["curves"].empty()) {
    throw IoError("sketch file needs a non-empty curves array");
  }
  Sketch3D sketch;
  sketch.prompt = j.value("prompt", std::string{});
  sketch.seed = j.value("seed", std::uint64_t{0});
  for (const auto& c : j["curves"]) {
    if (!c.is_array() || c.size() != 4) {
      throw IoError("each curve needs exactly 4 control points");
    }
    BezierCurve curve;
    for (int k = 0; k < 4; ++k) curve.control[k] = point_from(c[k], "control point");
    sketch.curves.push_back(curve);
  }
  validate(sketch);
  return sketch;
}

json parse(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

std::string sketch_to_json(const Sketch3D& sketch) {
  return sketch_json(sketch).dump(1) + "\n";
}

Sketch3D sketch_from_json(std::string_view text) {
  return sketch_from(parse(text));
}

void write_sketch(const std::filesystem::path& path, const Sketch3D& sketch) {
  write_text(path, sketch_to_json(sketch));
}

Sketch3D read_sketch(const std::filesystem::path& path) {
  return sketch_from_json(read_text(path));
}

std::string animation_to_json(const Animation& animation) {
  const auto& f = animation.field;
  if (f.curves() != int(animation.base.curves.size())) {
    throw ShapeError("animation field and base sketch disagree on curves");
  }
  json frames = json::array();
  for (int k = 0; k < f.frames(); ++k) {
    json curves = json::array();
    for (int i = 0; i < f.curves(); ++i) {
      json pts = json::array();
      for (int j = 0; j < 4; ++j) pts.push_back(point_json(f.at(k, i, j)));
      curves.push_back(std::move(pts));
    }
    frames.push_back(std::move(curves));
  }
  return json{{"version", 1},
              {"base", sketch_json(animation.base)},
              {"K", f.frames()},
              {"displacements", std::move(frames)}}
             .dump(1) +
         "\n";
}

Animation animation_from_json(std::string_view text) {
  const json j = parse(text);
  if (!j.is_object() || j.value("version", 0) != 1 || !j.contains("base") ||
      !j.contains("K") || !j.contains("displacements")) {
    throw IoError("animation file needs version 1, base, K, displacements");
  }
  Animation a;
  a.base = sketch_from(j["base"]);
  const int K = j["K"].get<int>();
  const auto& d = j["displacements"];
  if (K < 1 || !d.is_array() || int(d.size()) != K) {
    throw IoError("animation displacements must hold K frames");
  }
  const int N = int(a.base.curves.size());
  a.field = DisplacementField(K, N);
  for (int k = 0; k < K; ++k) {
    if (!d[k].is_array() || int(d[k].size()) != N) {
      throw IoError("animation frame " + std::to_string(k) +
                    " must hold one entry per curve");
    }
    for (int i = 0; i < N; ++i) {
      if (!d[k][i].is_array() || d[k][i].size() != 4) {
        throw IoError("each displaced curve needs 4 offsets");
      }
      for (int jj = 0; jj < 4; ++jj) {
        a.field.at(k, i, jj) = point_from(d[k][i][jj], "displacement");
      }
    }
  }
  return a;
}

void write_animation(const std::filesystem::path& path,
                     const Animation& animation) {
  write_text(path, animation_to_json(animation));
}

Animation read_animation(const std::filesystem::path& path) {
  return animation_from_json(read_text(path));
}

bool is_animation_file(const std::filesystem::path& path) {
  const json j = parse(read_text(path));
  return j.is_object() && j.contains("displacements");
}

std::string curves_to_svg(const std::vector<Bezier2D>& curves, int width,
                          int height, double stroke_width) {
  std::ostringstream os;
  os.precision(10);
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\""
     << width << "\" height=\"" << height << "\" viewBox=\"0 0 " << width
     << " " << height << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const auto& c : curves) {
    const auto& p = c.control;
    os << "<path d=\"M " << p[0].u << " " << p[0].v << " C " << p[1].u << " "
       << p[1].v << " " << p[2].u << " " << p[2].v << " " << p[3].u << " "
       << p[3].v << "\" fill=\"none\" stroke=\"black\" stroke-width=\""
       << stroke_width << "\" stroke-linecap=\"round\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_stage1_trace(const std::filesystem::path& path,
                        const std::vector<Stage1TraceRow>& trace,
                        const std::vector<std::string>& view_columns) {
  std::ostringstream os;
  os.precision(10);
  os << "iter,t";
  for (const auto& v : view_columns) os << ",sds_" << v;
  os << ",geometric\n";
  for (const auto& row : trace) {
    os << row.iter << "," << row.t;
    for (const auto& v : view_columns) {
      os << ",";
      for (const auto& [name, value] : row.sds) {
        if (name == v) os << value;
      }
    }
    os << "," << row.geometric << "\n";
  }
  write_text(path, os.str());
}

void write_stage2_trace(const std::filesystem::path& path,
                        const std::vector<Stage2TraceRow>& trace) {
  std::ostringstream os;
  os.precision(10);
  os << "iter,t,alpha,sds_frontal,sds_sagittal,smoothness\n";
  for (const auto& r : trace) {
    os << r.iter << "," << r.t << "," << r.alpha << "," << r.sds_frontal
       << "," << r.sds_sagittal << "," << r.smoothness << "\n";
  }
  write_text(path, os.str());
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(text.data(), std::streamsize(text.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace sketchanim
