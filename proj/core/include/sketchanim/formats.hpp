#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sketchanim/curves.hpp"
#include "sketchanim/motion.hpp"
#include "sketchanim/projection.hpp"
#include "sketchanim/stage1.hpp"

namespace sketchanim {

// Sketch file:
//   {"version": 1, "prompt": str, "seed": int, "curves": [[[x,y,z] x4] xN]}
std::string sketch_to_json(const Sketch3D& sketch);
Sketch3D sketch_from_json(std::string_view text);
void write_sketch(const std::filesystem::path& path, const Sketch3D& sketch);
Sketch3D read_sketch(const std::filesystem::path& path);

struct Animation {
  Sketch3D base;
  DisplacementField field;
};

// Animation file:
//   {"version": 1, "base": <sketch>, "K": int,
//    "displacements": [[[[dx,dy,dz] x4] xN] xK]}
std::string animation_to_json(const Animation& animation);
Animation animation_from_json(std::string_view text);
void write_animation(const std::filesystem::path& path,
                     const Animation& animation);
Animation read_animation(const std::filesystem::path& path);

/// True if the JSON document at `path` is an animation file.
bool is_animation_file(const std::filesystem::path& path);

/// SVG 1.1 document with one cubic <path> per projected curve.
std::string curves_to_svg(const std::vector<Bezier2D>& curves, int width,
                          int height, double stroke_width);

void write_stage1_trace(const std::filesystem::path& path,
                        const std::vector<Stage1TraceRow>& trace,
                        const std::vector<std::string>& view_columns);
void write_stage2_trace(const std::filesystem::path& path,
                        const std::vector<Stage2TraceRow>& trace);

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace sketchanim
