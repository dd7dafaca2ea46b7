#pragma once

// CSV writers and grayscale PNG rendering.
//
// series.csv  t,n_spots,n_tailed,mass_<species>...,zone_<name>_spots,zone_<name>_tailed...
// events.csv  t,kind,participants            (participants ';'-separated track ids)
// tracks.csv  track,parent,birth,end_time,end,points,tailed_fraction,speed,max_displacement,mean_radius
//
// Reals are printed with %.17g so files round-trip exactly.

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "rdspot/analysis.hpp"
#include "rdspot/errors.hpp"
#include "rdspot/snapshot.hpp"

namespace rdspot {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string fmt_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

inline std::string series_csv(const std::vector<AnalysisFrame>& frames,
                              const std::vector<std::string>& species,
                              const std::vector<Zone>& zones) {
  std::string out = "t,n_spots,n_tailed";
  for (const auto& s : species) out += ",mass_" + s;
  for (const auto& z : zones) out += ",zone_" + z.name + "_spots,zone_" + z.name + "_tailed";
  out += '\n';
  const auto rows = population_series(frames, zones);
  for (std::size_t n = 0; n < rows.size(); ++n) {
    const auto& r = rows[n];
    out += fmt_real(r.t) + ',' + std::to_string(r.n_spots) + ',' + std::to_string(r.n_tailed);
    for (double m : frames[n].masses) out += ',' + fmt_real(m);
    for (std::size_t z = 0; z < zones.size(); ++z)
      out += ',' + std::to_string(r.zone_spots[z]) + ',' + std::to_string(r.zone_tailed[z]);
    out += '\n';
  }
  return out;
}

inline std::string events_csv(const std::vector<LineageEvent>& events) {
  std::string out = "t,kind,participants\n";
  for (const auto& e : events) {
    out += fmt_real(e.t) + ',' + std::string(to_string(e.kind)) + ',';
    for (std::size_t k = 0; k < e.participants.size(); ++k) {
      if (k) out += ';';
      out += std::to_string(e.participants[k]);
    }
    out += '\n';
  }
  return out;
}

inline std::string_view to_string(Track::End e) {
  switch (e) {
    case Track::End::alive: return "alive";
    case Track::End::died: return "died";
    case Track::End::divided: return "divided";
    case Track::End::merged: return "merged";
  }
  return "?";
}

/// Mean effective radius over a track's frames.
inline double mean_radius(const GridSpec& g, const Track& t) {
  double s = 0.0;
  for (const auto& p : t.points) s += effective_radius(g, p.spot);
  return t.points.empty() ? 0.0 : s / static_cast<double>(t.points.size());
}

inline std::optional<double> track_speed(const Track& t, double window) {
  if (t.points.size() < 2 || t.span() + 1e-9 * window < window) return std::nullopt;
  try {
    return velocity(t, window);
  } catch (const AnalysisError&) {
    return std::nullopt;
  }
}

inline std::string tracks_csv(const GridSpec& g, const std::vector<Track>& tracks, double window) {
  std::string out =
      "track,parent,birth,end_time,end,points,tailed_fraction,speed,max_displacement,mean_radius\n";
  for (const auto& t : tracks) {
    out += std::to_string(t.id) + ',' + (t.parent ? std::to_string(*t.parent) : "") + ',' +
           fmt_real(t.birth) + ',' + (t.death ? fmt_real(*t.death) : "") + ',' +
           std::string(to_string(t.end)) + ',' + std::to_string(t.points.size()) + ',' +
           fmt_real(t.tailed_fraction()) + ',';
    if (const auto v = track_speed(t, window)) out += fmt_real(*v);
    out += ',' + fmt_real(max_displacement(t)) + ',' + fmt_real(mean_radius(g, t)) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rendering: white background, waste/tail species shade towards light gray,
// B towards black on top.

inline constexpr int kSecondaryGray = 170;

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, top row first
};

/// Fixed 256-entry palette: index 0 is the background, 255 full intensity.
inline std::uint8_t palette_index(double value, double max) {
  if (!(value > 0.0)) return 0;
  const double f = std::min(1.0, value / max);
  return static_cast<std::uint8_t>(std::lround(f * 255.0));
}

inline GrayImage render_snapshot(const Snapshot& s, double b_max, double c_max, double p_max) {
  GrayImage img;
  img.width = s.nx;
  img.height = s.ny;
  img.pixels.assign(static_cast<std::size_t>(s.nx) * static_cast<std::size_t>(s.ny), 255);
  auto find = [&](const char* name) -> const std::vector<double>* {
    for (std::size_t n = 0; n < s.names.size(); ++n)
      if (s.names[n] == name) return &s.fields[n];
    return nullptr;
  };
  const auto* b = find("b");
  const auto* c = find("c");
  const auto* p = find("p");
  for (int j = 0; j < s.ny; ++j)
    for (int i = 0; i < s.nx; ++i) {
      const std::size_t n = static_cast<std::size_t>(j) * s.nx + i;
      double v = 255.0;
      if (c) v -= (255.0 - kSecondaryGray) * palette_index((*c)[n], c_max) / 255.0;
      if (p) v -= (255.0 - kSecondaryGray) * palette_index((*p)[n], p_max) / 255.0;
      if (b) v *= 1.0 - palette_index((*b)[n], b_max) / 255.0;
      // y grows upwards in the image.
      const std::size_t row = static_cast<std::size_t>(s.ny - 1 - j);
      img.pixels[row * s.nx + i] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
    }
  return img;
}

inline void write_png(const std::string& path, const GrayImage& img) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("cannot open " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("PNG encoding failed: " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height),
               8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < img.height; ++r)
    png_write_row(png, const_cast<png_bytep>(img.pixels.data() + static_cast<std::size_t>(r) * img.width));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(fp) != 0) throw IoError("write failed: " + path);
}

/// Decodes an 8-bit grayscale PNG (used by tests and `render` checks).
inline GrayImage read_png_gray(const std::string& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw IoError("cannot read PNG " + path + ": " + image.message);
  image.format = PNG_FORMAT_GRAY;
  GrayImage img;
  img.width = static_cast<int>(image.width);
  img.height = static_cast<int>(image.height);
  img.pixels.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, img.pixels.data(), 0, nullptr))
    throw IoError("cannot decode PNG " + path + ": " + image.message);
  return img;
}

}  // namespace rdspot
