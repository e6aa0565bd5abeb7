#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "toppose/annotations.hpp"

namespace toppose {

using nlohmann::json;

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string(what) + ": malformed JSON: " + e.what());
  }
}

// Location prefix for diagnostics, e.g. "annotations[3] (id=17)".
std::string where(const char* array, std::size_t index, const json& record) {
  std::string s = std::string(array) + "[" + std::to_string(index) + "]";
  if (record.is_object() && record.contains("id") && record["id"].is_number_integer())
    s += " (id=" + std::to_string(record["id"].get<std::int64_t>()) + ")";
  return s;
}

double finite_number(const json& v, const std::string& loc, const char* field) {
  if (!v.is_number()) throw SchemaError(loc + ": " + field + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw SchemaError(loc + ": " + field + " must be finite");
  return d;
}

std::int64_t integer(const json& record, const char* field, const std::string& loc) {
  if (!record.contains(field)) throw SchemaError(loc + ": missing " + field);
  const json& v = record[field];
  if (!v.is_number_integer()) throw SchemaError(loc + ": " + field + " must be an integer");
  return v.get<std::int64_t>();
}

const json& flat_keypoints(const json& record, const std::string& loc) {
  if (!record.contains("keypoints") || !record["keypoints"].is_array())
    throw SchemaError(loc + ": missing keypoints array");
  const json& kp = record["keypoints"];
  if (kp.size() != 3 * kNumKeypoints)
    throw SchemaError(loc + ": keypoints must have " + std::to_string(3 * kNumKeypoints) +
                      " values, got " + std::to_string(kp.size()));
  return kp;
}

std::optional<Boxd> optional_bbox(const json& record, const std::string& loc) {
  if (!record.contains("bbox") || record["bbox"].is_null()) return std::nullopt;
  const json& b = record["bbox"];
  if (!b.is_array() || b.size() != 4) throw SchemaError(loc + ": bbox must have 4 values");
  Boxd box{finite_number(b[0], loc, "bbox"), finite_number(b[1], loc, "bbox"),
           finite_number(b[2], loc, "bbox"), finite_number(b[3], loc, "bbox"), 1.0};
  if (box.width < 0 || box.height < 0) throw SchemaError(loc + ": bbox size must be >= 0");
  return box;
}

json bbox_json(const Boxd& b) { return json::array({b.x_min, b.y_min, b.width, b.height}); }

// One record per line keeps the files diffable.
std::string json_lines(const json& array) {
  if (array.empty()) return "[]\n";
  std::string out = "[\n";
  for (std::size_t i = 0; i < array.size(); ++i) {
    out += array[i].dump();
    out += (i + 1 < array.size()) ? ",\n" : "\n";
  }
  return out + "]\n";
}

}  // namespace

std::vector<Pose> AnnotationSet::poses_for(ImageId image_id) const {
  std::vector<Pose> out;
  for (const Pose& p : annotations)
    if (p.image_id == image_id) out.push_back(p);
  return out;
}

AnnotationSet parse_annotations(const std::string& text) {
  const json root = parse_json(text, "annotations");
  if (!root.is_object()) throw SchemaError("annotations: root must be an object");
  if (!root.contains("images") || !root["images"].is_array())
    throw SchemaError("annotations: missing images array");
  if (!root.contains("annotations") || !root["annotations"].is_array())
    throw SchemaError("annotations: missing annotations array");

  AnnotationSet set;
  set.categories.clear();
  std::set<std::int64_t> person_ids;
  if (root.contains("categories") && root["categories"].is_array()) {
    for (std::size_t i = 0; i < root["categories"].size(); ++i) {
      const json& c = root["categories"][i];
      const std::string loc = where("categories", i, c);
      Category cat{integer(c, "id", loc), c.value("name", std::string{})};
      if (cat.name == "person") person_ids.insert(cat.id);
      set.categories.push_back(cat);
    }
  }
  if (set.categories.empty()) {
    set.categories.push_back(Category{});
    person_ids.insert(1);
  }

  std::set<ImageId> image_ids;
  for (std::size_t i = 0; i < root["images"].size(); ++i) {
    const json& img = root["images"][i];
    const std::string loc = where("images", i, img);
    if (!img.is_object()) throw SchemaError(loc + ": must be an object");
    ImageInfo info{integer(img, "id", loc), 0, 0};
    if (img.contains("width")) info.width = static_cast<int>(integer(img, "width", loc));
    if (img.contains("height")) info.height = static_cast<int>(integer(img, "height", loc));
    if (!image_ids.insert(info.id).second) throw SchemaError(loc + ": duplicate image id");
    set.images.push_back(info);
  }

  const json& anns = root["annotations"];
  for (std::size_t i = 0; i < anns.size(); ++i) {
    const json& a = anns[i];
    const std::string loc = where("annotations", i, a);
    if (!a.is_object()) throw SchemaError(loc + ": must be an object");
    const std::int64_t category = a.contains("category_id") ? integer(a, "category_id", loc) : 1;
    if (!person_ids.count(category)) continue;

    Pose pose;
    pose.image_id = integer(a, "image_id", loc);
    if (!image_ids.count(pose.image_id))
      throw SchemaError(loc + ": image_id " + std::to_string(pose.image_id) +
                        " does not name an image");
    const json& kp = flat_keypoints(a, loc);
    for (int k = 0; k < kNumKeypoints; ++k) {
      pose.keypoints(k, 0) = finite_number(kp[3 * k], loc, "keypoints");
      pose.keypoints(k, 1) = finite_number(kp[3 * k + 1], loc, "keypoints");
      const double v = finite_number(kp[3 * k + 2], loc, "keypoints");
      if (v != 0 && v != 1 && v != 2)
        throw SchemaError(loc + ": visibility flags must be 0, 1 or 2");
      pose.visibility(k) = static_cast<int>(v);
    }
    if (!a.contains("area")) throw SchemaError(loc + ": missing area");
    pose.area = finite_number(a["area"], loc, "area");
    if (pose.area < 0) throw SchemaError(loc + ": area must be >= 0");
    pose.bbox = optional_bbox(a, loc);
    const bool crowd = a.contains("iscrowd") && a["iscrowd"].is_number() && a["iscrowd"] != 0;
    const bool flagged = a.contains("ignore") && a["ignore"].is_number() && a["ignore"] != 0;
    pose.ignore = crowd || flagged || pose.num_labeled() == 0 || pose.area <= 0;
    set.annotations.push_back(pose);
    set.annotation_ids.push_back(a.contains("id") ? integer(a, "id", loc)
                                                  : static_cast<std::int64_t>(i + 1));
  }
  return set;
}

AnnotationSet load_annotations(const std::filesystem::path& path) {
  try {
    return parse_annotations(read_text(path));
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void save_annotations(const AnnotationSet& set, const std::filesystem::path& path) {
  json images = json::array();
  for (const auto& img : set.images)
    images.push_back({{"id", img.id}, {"width", img.width}, {"height", img.height}});
  json anns = json::array();
  for (std::size_t i = 0; i < set.annotations.size(); ++i) {
    const Pose& p = set.annotations[i];
    json kp = json::array();
    for (int k = 0; k < kNumKeypoints; ++k) {
      kp.push_back(p.keypoints(k, 0));
      kp.push_back(p.keypoints(k, 1));
      kp.push_back(p.visibility(k));
    }
    json a = {{"id", i < set.annotation_ids.size() ? set.annotation_ids[i]
                                                    : static_cast<std::int64_t>(i + 1)},
              {"image_id", p.image_id},
              {"category_id", 1},
              {"keypoints", kp},
              {"num_keypoints", p.num_labeled()},
              {"area", p.area},
              {"iscrowd", 0}};
    if (p.bbox) a["bbox"] = bbox_json(*p.bbox);
    if (p.ignore && p.num_labeled() > 0 && p.area > 0) a["ignore"] = 1;
    anns.push_back(a);
  }
  json names = json::array();
  for (auto n : kKeypointNames) names.push_back(std::string(n));
  json cats = json::array();
  for (const auto& c : set.categories) {
    json cat = {{"id", c.id}, {"name", c.name}};
    if (c.name == "person") cat["keypoints"] = names;
    cats.push_back(cat);
  }
  json root = {{"images", images}, {"annotations", anns}, {"categories", cats}};
  write_text(path, root.dump(1) + "\n");
}

std::vector<PoseDetection> parse_detections(const std::string& text) {
  const json root = parse_json(text, "detections");
  if (!root.is_array()) throw SchemaError("detections: root must be an array");
  std::vector<PoseDetection> dets;
  dets.reserve(root.size());
  for (std::size_t i = 0; i < root.size(); ++i) {
    const json& r = root[i];
    const std::string loc = where("detections", i, r);
    if (!r.is_object()) throw SchemaError(loc + ": must be an object");
    PoseDetection d;
    d.image_id = integer(r, "image_id", loc);
    if (r.contains("category_id") && integer(r, "category_id", loc) != 1)
      throw SchemaError(loc + ": category_id must be 1 (person)");
    const json& kp = flat_keypoints(r, loc);
    for (int k = 0; k < kNumKeypoints; ++k) {
      d.keypoints(k, 0) = finite_number(kp[3 * k], loc, "keypoints");
      d.keypoints(k, 1) = finite_number(kp[3 * k + 1], loc, "keypoints");
      d.keypoint_scores(k) = finite_number(kp[3 * k + 2], loc, "keypoints");
      if (d.keypoint_scores(k) < 0) throw SchemaError(loc + ": keypoint scores must be >= 0");
    }
    if (!r.contains("score")) throw SchemaError(loc + ": missing score");
    d.score = finite_number(r["score"], loc, "score");
    if (d.score < 0) throw SchemaError(loc + ": score must be >= 0");
    if (auto box = optional_bbox(r, loc)) {
      d.box = *box;
      if (r.contains("box_score")) d.box.score = finite_number(r["box_score"], loc, "box_score");
    } else {
      d.box = keypoint_extent(d.keypoints, VisibilityVector::Constant(1));
    }
    dets.push_back(d);
  }
  return dets;
}

std::vector<PoseDetection> load_detections(const std::filesystem::path& path) {
  try {
    return parse_detections(read_text(path));
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

std::string detections_to_json(std::span<const PoseDetection> dets) {
  json arr = json::array();
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const PoseDetection& d = dets[i];
    const bool finite = d.keypoints.allFinite() && d.keypoint_scores.allFinite() &&
                        std::isfinite(d.score) && d.box.valid();
    if (!finite) throw InvalidInput("detection " + std::to_string(i) + " has non-finite values");
    if (d.score < 0 || (d.keypoint_scores.array() < 0).any())
      throw InvalidInput("detection " + std::to_string(i) + " has a negative score");
    json kp = json::array();
    for (int k = 0; k < kNumKeypoints; ++k) {
      kp.push_back(d.keypoints(k, 0));
      kp.push_back(d.keypoints(k, 1));
      kp.push_back(d.keypoint_scores(k));
    }
    arr.push_back({{"image_id", d.image_id},
                   {"category_id", 1},
                   {"keypoints", kp},
                   {"score", d.score},
                   {"bbox", bbox_json(d.box)},
                   {"box_score", d.box.score}});
  }
  return json_lines(arr);
}

void write_detections(std::span<const PoseDetection> dets, const std::filesystem::path& path) {
  write_text(path, detections_to_json(dets));
}

std::vector<BoxRecord> load_boxes(const std::filesystem::path& path) {
  try {
    const json root = parse_json(read_text(path), "boxes");
    if (!root.is_array()) throw SchemaError("boxes: root must be an array");
    std::vector<BoxRecord> out;
    for (std::size_t i = 0; i < root.size(); ++i) {
      const json& r = root[i];
      const std::string loc = where("boxes", i, r);
      if (!r.is_object()) throw SchemaError(loc + ": must be an object");
      BoxRecord rec;
      rec.image_id = integer(r, "image_id", loc);
      auto box = optional_bbox(r, loc);
      if (!box) throw SchemaError(loc + ": missing bbox");
      rec.box = *box;
      rec.box.score = r.contains("score") ? finite_number(r["score"], loc, "score") : 1.0;
      if (!rec.box.valid()) throw SchemaError(loc + ": bbox needs positive size, score in [0, 1]");
      out.push_back(rec);
    }
    return out;
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void write_boxes(std::span<const BoxRecord> boxes, const std::filesystem::path& path) {
  json arr = json::array();
  for (const auto& b : boxes)
    arr.push_back({{"image_id", b.image_id},
                   {"category_id", 1},
                   {"bbox", bbox_json(b.box)},
                   {"score", b.box.score}});
  write_text(path, json_lines(arr));
}

}  // namespace toppose
