#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "grasp/png_io.hpp"
#include "grasp/rgbd_image.hpp"

namespace grasp {

/// On-disk scene layout (Cornell-style). Per image id NNNN:
///   pcdNNNNr.png      8-bit RGB view
///   pcdNNNN.txt       ASCII PCD cloud; depth comes from the z and index
///                     columns, index = row * width + col
///   pcdNNNNcpos.txt   positive rectangles, 4 "x y" vertex lines each,
///   pcdNNNNcneg.txt   first edge along a gripper plate
///   z.txt             object-id mapping: "pcdNNNN <object_id> ..." lines
namespace cornell {

namespace detail {

inline std::string id_name(int id) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "pcd%04d", id);
  return buf;
}

inline bool parse_two_doubles(const std::string& line, double& a, double& b) {
  const char* s = line.c_str();
  char* end = nullptr;
  a = std::strtod(s, &end);
  if (end == s) return false;
  s = end;
  b = std::strtod(s, &end);
  if (end == s) return false;
  while (*end != '\0') {
    if (!std::isspace(static_cast<unsigned char>(*end))) return false;
    ++end;
  }
  return true;
}

}  // namespace detail

/// Parses a rectangle vertex file. Rectangles with any NaN vertex are
/// skipped (with a warning); malformed lines are hard errors naming the
/// file and line number.
inline std::vector<GraspRect> load_rect_file(const std::filesystem::path& path,
                                             std::vector<std::string>* warnings = nullptr) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open rectangle file " + path.string());
  std::vector<GraspRect> rects;
  std::array<Point2, 4> quad;
  int corner = 0;
  bool has_nan = false;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    double x, y;
    if (!detail::parse_two_doubles(line, x, y))
      throw DataError("malformed vertex line in " + path.string() + ":" +
                      std::to_string(line_no));
    quad[static_cast<std::size_t>(corner)] = {x, y};
    if (std::isnan(x) || std::isnan(y)) has_nan = true;
    if (++corner == 4) {
      if (has_nan) {
        if (warnings)
          warnings->push_back(path.string() + ": skipped rectangle with NaN vertex ending at line " +
                              std::to_string(line_no));
      } else {
        rects.push_back(GraspRect::from_vertices(quad));
      }
      corner = 0;
      has_nan = false;
    }
  }
  if (corner != 0)
    throw DataError("rectangle file " + path.string() + " ends mid-rectangle (" +
                    std::to_string(corner) + " of 4 vertices)");
  return rects;
}

inline void save_rect_file(const std::filesystem::path& path, const std::vector<GraspRect>& rects) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write rectangle file " + path.string());
  char buf[80];
  for (const auto& r : rects)
    for (const auto& v : r.vertices()) {
      std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", v.x, v.y);
      os << buf;
    }
}

/// Reads the depth plane from an ASCII PCD file. Only the z and index
/// columns are used; pixels without a point stay invalid.
inline void load_pcd_depth(const std::filesystem::path& path, RgbdImage& img) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open point cloud " + path.string());
  std::string line;
  int line_no = 0;
  int z_col = -1, index_col = -1, n_fields = 0;
  long points = -1;
  int width = -1, height = -1;
  // header
  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "FIELDS") {
      std::string f;
      while (ss >> f) {
        if (f == "z") z_col = n_fields;
        if (f == "index") index_col = n_fields;
        ++n_fields;
      }
    } else if (key == "WIDTH") {
      ss >> width;
    } else if (key == "HEIGHT") {
      ss >> height;
    } else if (key == "POINTS") {
      ss >> points;
    } else if (key == "DATA") {
      std::string kind;
      ss >> kind;
      if (kind != "ascii")
        throw DataError(path.string() + ": only ascii PCD data is supported");
      break;
    }
  }
  if (z_col < 0 || index_col < 0)
    throw DataError(path.string() + ": PCD header lacks z or index field");
  if (width != img.width || height != img.height)
    throw DataError(path.string() + ": PCD grid " + std::to_string(width) + "x" +
                    std::to_string(height) + " does not match image " +
                    std::to_string(img.width) + "x" + std::to_string(img.height));

  img.valid.setConstant(false);
  std::vector<double> cols(static_cast<std::size_t>(n_fields));
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    const char* s = line.c_str();
    char* end = nullptr;
    for (int c = 0; c < n_fields; ++c) {
      cols[static_cast<std::size_t>(c)] = std::strtod(s, &end);
      if (end == s)
        throw DataError("malformed point line in " + path.string() + ":" +
                        std::to_string(line_no));
      s = end;
    }
    double z = cols[static_cast<std::size_t>(z_col)];
    long idx = std::lround(cols[static_cast<std::size_t>(index_col)]);
    if (idx < 0 || idx >= static_cast<long>(img.width) * img.height)
      throw DataError("point index out of range in " + path.string() + ":" +
                      std::to_string(line_no));
    if (std::isnan(z)) continue;
    int row = static_cast<int>(idx / img.width);
    int col = static_cast<int>(idx % img.width);
    img.channels[kDepth](row, col) = z;
    img.valid(row, col) = true;
  }
}

inline void save_pcd_depth(const std::filesystem::path& path, const RgbdImage& img) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write point cloud " + path.string());
  long count = 0;
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c)
      if (img.valid(r, c)) ++count;
  os << "# .PCD v.7 - Point Cloud Data file format\n"
     << "VERSION .7\nFIELDS x y z index\nSIZE 4 4 4 4\nTYPE F F F F\nCOUNT 1 1 1 1\n"
     << "WIDTH " << img.width << "\nHEIGHT " << img.height
     << "\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS " << count << "\nDATA ascii\n";
  char buf[128];
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      if (!img.valid(r, c)) continue;
      std::snprintf(buf, sizeof(buf), "%d %d %.17g %ld\n", c, r, img.channels[kDepth](r, c),
                    static_cast<long>(r) * img.width + c);
      os << buf;
    }
}

inline std::map<int, int> load_object_ids(const std::filesystem::path& path) {
  std::map<int, int> ids;
  std::ifstream is(path);
  if (!is) return ids;
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ss(line);
    std::string token;
    int object_id;
    if (!(ss >> token >> object_id)) continue;
    // token is "pcdNNNN" or plain digits
    std::string digits;
    for (char ch : token)
      if (std::isdigit(static_cast<unsigned char>(ch))) digits += ch;
    if (digits.empty()) continue;
    ids[std::stoi(digits)] = object_id;
  }
  return ids;
}

/// Loads every scene found in a directory. Scenes with a missing component
/// file are skipped with a warning; malformed contents are errors.
inline std::vector<AnnotatedScene> load_directory(const std::filesystem::path& dir,
                                                  std::vector<std::string>* warnings = nullptr,
                                                  int normal_window = 7) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());

  std::vector<int> ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::string name = entry.path().filename().string();
    if (name.size() == 12 && name.rfind("pcd", 0) == 0 && name.substr(7) == "r.png") {
      bool digits = true;
      for (int i = 3; i < 7; ++i)
        if (!std::isdigit(static_cast<unsigned char>(name[static_cast<std::size_t>(i)])))
          digits = false;
      if (digits) ids.push_back(std::stoi(name.substr(3, 4)));
    }
  }
  std::sort(ids.begin(), ids.end());

  auto object_ids = load_object_ids(dir / "z.txt");
  if (object_ids.empty() && warnings)
    warnings->push_back("no usable z.txt object-id mapping in " + dir.string() +
                        "; using image ids as object ids");

  std::vector<AnnotatedScene> scenes;
  for (int id : ids) {
    const std::string base = detail::id_name(id);
    fs::path png = dir / (base + "r.png");
    fs::path pcd = dir / (base + ".txt");
    fs::path pos = dir / (base + "cpos.txt");
    fs::path neg = dir / (base + "cneg.txt");
    std::string missing;
    for (const auto& p : {pcd, pos, neg})
      if (!fs::exists(p)) missing = p.string();
    if (!missing.empty()) {
      if (warnings) warnings->push_back("skipping image " + base + ": missing " + missing);
      continue;
    }

    ImageU8 rgb = read_png(png);
    if (rgb.channels != 3) {
      if (warnings) warnings->push_back("skipping image " + base + ": not an RGB png");
      continue;
    }
    AnnotatedScene scene;
    scene.image = RgbdImage(rgb.width, rgb.height);
    for (int r = 0; r < rgb.height; ++r)
      for (int c = 0; c < rgb.width; ++c) {
        double y, u, v;
        rgb_to_yuv(rgb.at(r, c, 0) / 255.0, rgb.at(r, c, 1) / 255.0, rgb.at(r, c, 2) / 255.0,
                   y, u, v);
        scene.image.channels[kY](r, c) = y;
        scene.image.channels[kU](r, c) = u;
        scene.image.channels[kV](r, c) = v;
      }
    load_pcd_depth(pcd, scene.image);
    estimate_normals(scene.image, normal_window);

    scene.positives = load_rect_file(pos, warnings);
    scene.negatives = load_rect_file(neg, warnings);
    scene.image_id = id;
    auto it = object_ids.find(id);
    scene.object_id = it != object_ids.end() ? it->second : id;
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

/// Writes one scene in the on-disk layout (color PNG, PCD depth, rectangle
/// files). The z.txt mapping is appended by save_dataset.
inline void save_scene(const std::filesystem::path& dir, const AnnotatedScene& scene) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::string base = detail::id_name(scene.image_id);

  ImageU8 rgb;
  rgb.width = scene.image.width;
  rgb.height = scene.image.height;
  rgb.channels = 3;
  rgb.pixels.resize(static_cast<std::size_t>(rgb.width) * rgb.height * 3);
  for (int r = 0; r < rgb.height; ++r)
    for (int c = 0; c < rgb.width; ++c) {
      double red, green, blue;
      yuv_to_rgb(scene.image.channels[kY](r, c), scene.image.channels[kU](r, c),
                 scene.image.channels[kV](r, c), red, green, blue);
      auto to_u8 = [](double x) {
        return static_cast<unsigned char>(std::lround(std::clamp(x, 0.0, 1.0) * 255.0));
      };
      rgb.at(r, c, 0) = to_u8(red);
      rgb.at(r, c, 1) = to_u8(green);
      rgb.at(r, c, 2) = to_u8(blue);
    }
  write_png(dir / (base + "r.png"), rgb);
  save_pcd_depth(dir / (base + ".txt"), scene.image);
  save_rect_file(dir / (base + "cpos.txt"), scene.positives);
  save_rect_file(dir / (base + "cneg.txt"), scene.negatives);
}

inline void save_dataset(const std::filesystem::path& dir,
                         const std::vector<AnnotatedScene>& scenes) {
  std::filesystem::create_directories(dir);
  std::ofstream zs(dir / "z.txt", std::ios::trunc);
  if (!zs) throw DataError("cannot write " + (dir / "z.txt").string());
  for (const auto& scene : scenes) {
    save_scene(dir, scene);
    zs << detail::id_name(scene.image_id) << " " << scene.object_id << "\n";
  }
}

}  // namespace cornell
}  // namespace grasp
