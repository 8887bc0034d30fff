/* Copyright 2026 The semls Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// The `semls` command line. run_command() is the whole program minus the
// process boundary, so tests can drive it in-process.
//
// Exit status: 0 success, 1 validation error (bad input or a failed self
// check), 2 degenerate data, 64 usage error.

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <fmt/ostream.h>

#include "semls/acl.hpp"
#include "semls/core.hpp"
#include "semls/evaluator.hpp"
#include "semls/geometry3d.hpp"
#include "semls/io.hpp"
#include "semls/lcd.hpp"
#include "semls/refine.hpp"
#include "semls/repeatability.hpp"
#include "semls/selfcheck.hpp"

namespace semls {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitDegenerate = 2;
inline constexpr int kExitUsage = 64;

namespace cli {

/// Comma-separated rows with shortest round-trip numbers.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : path_(path) {
    if (!path_.empty()) {
      file_.open(path_, std::ios::binary);
      if (!file_) throw ValidationError("cannot write '" + path_ + "'");
    }
  }

  bool enabled() const { return !path_.empty(); }

  template <class... Cells>
  void row(const Cells&... cells) {
    if (!enabled()) return;
    bool first = true;
    ((file_ << (first ? "" : ",") << cell(cells), first = false), ...);
    file_ << '\n';
  }

 private:
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(bool v) { return v ? "1" : "0"; }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

  std::string path_;
  std::ofstream file_;
};

struct Globals {
  std::uint64_t seed = 0;
  std::string out;
  std::vector<std::string> categories;

  CategoryRegistry registry() const {
    if (categories.empty()) return CategoryRegistry::with_defaults();
    return CategoryRegistry(categories);
  }
};

inline std::string fixed(double v) { return fmt::format("{:.6f}", v); }
inline std::string fixed(const std::optional<double>& v) { return v ? fixed(*v) : "n/a"; }

// --- acl ---------------------------------------------------------------------

struct AclArgs {
  std::string pairs;
  bool category_agnostic = false;
};

inline int cmd_acl(const Globals& g, const AclArgs& a, std::ostream& out) {
  const CategoryRegistry reg = g.registry();
  auto in = detail::open_input(a.pairs);
  CsvWriter csv(g.out);
  csv.row("pair", "sim_angle", "sim_center", "sim_length", "acl");
  std::size_t index = 0;
  detail::for_each_record(in, [&](const detail::Json& j, std::size_t line) {
    auto ref = j.find("ref");
    auto oth = j.find("other");
    if (ref == j.end() || oth == j.end()) detail::fail_at(line, "pair needs 'ref' and 'other'");
    const SemLS r = parse_segment_record(*ref, line, "ref: ", reg, true).line;
    const SemLS o = parse_segment_record(*oth, line, "other: ", reg, true).line;
    const double sa = sim_angle(r, o), sc = sim_center(r, o), sl = sim_length(r, o);
    const double v = acl(r, o, a.category_agnostic);
    fmt::print(out, "pair {}: acl={} (angle={} center={} length={})\n", index, fixed(v), fixed(sa),
               fixed(sc), fixed(sl));
    csv.row(index, sa, sc, sl, v);
    ++index;
  });
  if (index == 0) throw ValidationError(a.pairs + ": no pair");
  return kExitOk;
}

// --- eval --------------------------------------------------------------------

struct EvalArgs {
  std::string gt;
  std::string det;
};

inline int cmd_eval(const Globals& g, const EvalArgs& a, std::ostream& out) {
  const CategoryRegistry reg = g.registry();
  const auto gt = to_detection_set(load_annotations(a.gt, reg));
  const auto det = to_detection_set(load_annotations(a.det, reg));
  const EvalReport rep = evaluate(gt, det, reg);
  if (rep.empty) throw DegenerateError("ground truth holds no line segment");

  CsvWriter csv(g.out);
  const auto th = acl_thresholds();
  fmt::print(out, "{:<12} {:>6} {:>6} {:>10} {:>10} {:>10}\n", "category", "n_gt", "n_det",
             "AP@0.50", "AP@0.75", "mean AP");
  if (csv.enabled()) {
    std::string header = "category,n_gt,n_det";
    for (double t : th) header += ",ap_" + format_double(t);
    csv.row(header + ",mean_ap");
  }
  for (const auto& c : rep.categories) {
    fmt::print(out, "{:<12} {:>6} {:>6} {:>10} {:>10} {:>10}\n", c.name, c.n_gt, c.n_det,
               fixed(c.ap[0]), fixed(c.ap[5]), fixed(c.mean_ap));
    if (csv.enabled()) {
      std::string line = c.name + "," + std::to_string(c.n_gt) + "," + std::to_string(c.n_det);
      for (double v : c.ap) line += "," + format_double(v);
      line += "," + format_double(c.mean_ap);
      csv.row(line);
    }
  }
  fmt::print(out, "mAP@0.5={}\nmAP3@0.5={}\nfiltered_detections={}\n", fixed(rep.map),
             fixed(rep.map3), rep.filtered_detections);
  return kExitOk;
}

// --- repeat ------------------------------------------------------------------

struct RepeatArgs {
  std::string dets_a;
  std::string dets_b;
  std::string transform;
  bool category_agnostic = false;
  bool clip = false;
};

inline int cmd_repeat(const Globals& g, const RepeatArgs& a, std::ostream& out) {
  const CategoryRegistry reg = g.registry();
  const AnnotationFile fa = load_annotations(a.dets_a, reg);
  std::map<std::string, const ImageAnnotation*> fb;
  AnnotationFile fb_storage;
  if (!a.dets_b.empty()) {
    fb_storage = load_annotations(a.dets_b, reg);
    for (const auto& img : fb_storage) fb.emplace(img.image_id, &img);
  }
  std::map<std::string, AffineTransform> transforms;
  if (!a.transform.empty()) {
    auto in = detail::open_input(a.transform);
    transforms = load_transforms(in);
  }

  std::vector<RepeatPair> pairs;
  RepeatabilityOptions opt;
  opt.category_agnostic = a.category_agnostic;
  for (std::size_t i = 0; i < fa.size(); ++i) {
    const ImageAnnotation& img = fa[i];
    const ImageBounds bounds{static_cast<double>(img.width), static_cast<double>(img.height)};
    AffineTransform t;
    if (!a.transform.empty()) {
      auto it = transforms.find(img.image_id);
      if (it == transforms.end()) it = transforms.find("");
      if (it == transforms.end()) {
        throw ValidationError("no transform for image '" + img.image_id + "'");
      }
      t = it->second;
    } else {
      AffineSamplingConfig cfg;
      cfg.width = bounds.width;
      cfg.height = bounds.height;
      t = sample_affine(g.seed + i, cfg);
    }
    RepeatPair p;
    p.dets_i = img.lines();
    p.transform = t;
    if (fb.empty()) {
      for (const auto& w : transform_segments(p.dets_i, t, bounds)) p.dets_it.push_back(w.segment);
    } else {
      auto it = fb.find(img.image_id);
      if (it == fb.end()) {
        throw ValidationError("image '" + img.image_id + "' missing from " + a.dets_b);
      }
      p.dets_it = it->second->lines();
    }
    if (a.clip) p.bounds = bounds;
    pairs.push_back(std::move(p));
  }
  const RepeatabilityReport rep = mare(pairs, opt);
  CsvWriter csv(g.out);
  csv.row("threshold", "re");
  for (std::size_t k = 0; k < rep.thresholds.size(); ++k) {
    fmt::print(out, "Re@{:.1f}={}\n", rep.thresholds[k], fixed(rep.re[k]));
    csv.row(rep.thresholds[k], rep.re[k]);
  }
  fmt::print(out, "mARe={}\npairs={}\n", fixed(rep.mare), pairs.size());
  csv.row("mARe", rep.mare);
  return kExitOk;
}

// --- refine ------------------------------------------------------------------

struct RefineArgs {
  std::string annotations;
  std::string image;
  std::string image_dir;
  std::string candidates;
  std::string refined;
  double threshold = kRefineThreshold;
};

inline int cmd_refine(const Globals& g, const RefineArgs& a, std::ostream& out) {
  const CategoryRegistry reg = g.registry();
  AnnotationFile file = load_annotations(a.annotations, reg);
  std::map<std::string, std::vector<SemLS>> from_file;
  if (!a.candidates.empty()) {
    AnnotationLoadOptions lo;
    lo.require_category = false;
    from_file = to_detection_set(load_annotations(a.candidates, reg, lo));
  } else if (!a.image.empty() && file.size() != 1) {
    throw ValidationError("--image needs an annotation file with exactly one image");
  }

  CsvWriter csv(g.out);
  csv.row("image_id", "label", "replaced", "candidate");
  std::size_t replaced = 0, kept = 0;
  for (auto& img : file) {
    std::vector<SemLS> cands;
    if (!a.candidates.empty()) {
      if (auto it = from_file.find(img.image_id); it != from_file.end()) cands = it->second;
    } else {
      const std::string path = !a.image.empty()
                                   ? a.image
                                   : (std::filesystem::path(a.image_dir) / (img.image_id + ".pgm"))
                                         .string();
      const GrayImage gray = read_pgm(path);
      if (gray.width != static_cast<std::size_t>(img.width) ||
          gray.height != static_cast<std::size_t>(img.height)) {
        throw ValidationError(path + ": image size differs from annotation '" + img.image_id +
                              "'");
      }
      for (const auto& c : gradient_candidates(gray)) cands.push_back(c.segment);
    }
    std::vector<std::size_t> line_index;
    std::vector<SemLS> labels;
    for (std::size_t i = 0; i < img.segments.size(); ++i) {
      if (img.segments[i].is_box()) continue;
      line_index.push_back(i);
      labels.push_back(img.segments[i].line);
    }
    const RefineResult r = refine_labels(labels, cands, a.threshold);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      img.segments[line_index[i]].line = r.labels[i];
      csv.row(img.image_id, line_index[i], r.chosen[i].has_value(),
              r.chosen[i] ? std::to_string(*r.chosen[i]) : std::string());
    }
    replaced += r.replaced;
    kept += r.kept;
  }
  if (!a.refined.empty()) save_annotations(a.refined, file, reg);
  fmt::print(out, "replaced={}\nkept={}\n", replaced, kept);
  return kExitOk;
}

// --- projerr -----------------------------------------------------------------

struct ProjerrArgs {
  std::string annotations;
  std::string calibration;
  std::string triplets;
};

inline int cmd_projerr(const Globals& g, const ProjerrArgs& a, std::ostream& out) {
  const CategoryRegistry reg = g.registry();
  const AnnotationFile file = load_annotations(a.annotations, reg);
  std::map<std::string, const ImageAnnotation*> by_id;
  for (const auto& img : file) by_id.emplace(img.image_id, &img);
  std::map<std::string, CameraView> calib;
  {
    auto in = detail::open_input(a.calibration);
    calib = load_calibration(in);
  }
  std::vector<TripletSpec> specs;
  {
    auto in = detail::open_input(a.triplets);
    specs = load_triplets(in);
  }

  auto view_of = [&](const std::string& id) -> const CameraView& {
    auto it = calib.find(id);
    if (it == calib.end()) throw ValidationError("no calibration for image '" + id + "'");
    return it->second;
  };
  auto image_of = [&](const std::string& id) -> const ImageAnnotation& {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw ValidationError("no annotation for image '" + id + "'");
    return *it->second;
  };
  auto by_track = [](const ImageAnnotation& img) {
    std::map<int, SemLS> m;
    for (const auto& s : img.lines()) {
      if (s.track_id) m.emplace(*s.track_id, s);
    }
    return m;
  };

  std::vector<Triplet> triplets;
  std::vector<const TripletSpec*> origin;
  for (const auto& spec : specs) {
    const auto left = by_track(image_of(spec.left));
    const auto pre = by_track(image_of(spec.pre));
    const auto right = by_track(image_of(spec.right));
    const CameraView& vl = view_of(spec.left);
    const CameraView& vp = view_of(spec.pre);
    const CameraView& vr = view_of(spec.right);
    for (const auto& [track, seg] : left) {
      auto ip = pre.find(track);
      auto ir = right.find(track);
      if (ip == pre.end() || ir == right.end()) continue;
      Triplet t{{vl, seg}, {vp, ip->second}, {vr, ir->second}, track,
                (vl.center() - vp.center()).norm()};
      triplets.push_back(t);
      origin.push_back(&spec);
    }
  }
  if (triplets.empty()) throw DegenerateError("no track id is shared by all images of a triplet");

  const TripletErrorReport rep = triplet_projection_error(triplets);
  CsvWriter csv(g.out);
  csv.row("left", "pre", "right", "track_id", "baseline", "error");
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    csv.row(origin[i]->left, origin[i]->pre, origin[i]->right, triplets[i].track_id,
            triplets[i].baseline, rep.per_triplet[i]);
  }
  fmt::print(out, "mean_error_px={}\ntriplets={}\nskipped={}\n", fixed(rep.mean_error),
             triplets.size() - rep.skipped, rep.skipped);
  return kExitOk;
}

// --- lcd ---------------------------------------------------------------------

struct LcdArgs {
  std::string query;
  std::string db;
  std::string poses;
  std::string roc;
  double d_loop = kDefaultLoopDistance;
  bool keep_self = false;
};

inline int cmd_lcd(const Globals& g, const LcdArgs& a, std::ostream& out) {
  const CategoryRegistry reg = g.registry();
  std::map<std::string, std::array<double, 3>> poses;
  if (!a.poses.empty()) {
    auto in = detail::open_input(a.poses);
    poses = load_positions(in);
  }
  auto signatures = [&](const std::string& path) {
    std::vector<FrameSignature> v;
    for (const auto& img : load_annotations(path, reg)) {
      std::optional<std::array<double, 3>> pos;
      if (auto it = poses.find(img.image_id); it != poses.end()) pos = it->second;
      v.push_back(make_signature(img.image_id, img.lines(), img.width, img.height, pos));
    }
    return v;
  };
  const std::vector<FrameSignature> queries = signatures(a.query);
  const LcdIndex index = build_index(signatures(a.db));
  LoopGroundTruth truth;
  truth.d_loop = a.d_loop;
  RansacParams rp;
  rp.seed = g.seed;

  CsvWriter csv(g.out);
  csv.row("query_id", "match_id", "score", "vote_score", "verified", "has_true_loop", "correct");
  std::vector<ScoredQuery> scored;
  for (const auto& q : queries) {
    VoteParams vp;
    if (!a.keep_self) vp.exclude_frame_id = q.frame_id;
    const LoopQueryResult r = detect_loop(q, index, vp, rp);
    std::set<std::size_t> truths = truth.true_matches(q, index);
    if (!a.keep_self) {
      std::erase_if(truths, [&](std::size_t f) { return index.frames()[f].frame_id == q.frame_id; });
    }
    ScoredQuery s;
    s.score = r.frame ? r.score : -std::numeric_limits<double>::infinity();
    s.has_true_loop = !truths.empty();
    s.correct = r.frame && truths.contains(*r.frame);
    scored.push_back(s);
    const std::string match = r.frame ? r.frame_id : "-";
    fmt::print(out, "{} -> {} score={} verified={}\n", q.frame_id, match,
               r.frame ? fixed(r.score) : std::string("n/a"), r.verified ? 1 : 0);
    csv.row(q.frame_id, r.frame ? r.frame_id : std::string(),
            r.frame ? std::optional<double>(r.score) : std::nullopt, r.vote_score, r.verified,
            s.has_true_loop, s.correct);
  }
  if (!a.poses.empty()) {
    const RecallReport rep = recall_at_precision(scored);
    for (std::size_t i = 0; i < rep.precision_levels.size(); ++i) {
      fmt::print(out, "R@P{:.2f}={}\n", rep.precision_levels[i], fixed(rep.recalls[i]));
    }
    CsvWriter roc(a.roc);
    roc.row("threshold", "precision", "recall");
    for (const auto& p : rep.roc) roc.row(p.threshold, p.precision, p.recall);
  } else if (!a.roc.empty()) {
    throw ValidationError("--roc needs --poses");
  }
  return kExitOk;
}

// --- stats -------------------------------------------------------------------

struct StatsArgs {
  std::string annotations;
};

inline int cmd_stats(const Globals& g, const StatsArgs& a, std::ostream& out) {
  const CategoryRegistry reg = g.registry();
  const DatasetStats st = dataset_stats(load_annotations(a.annotations, reg), reg);
  CsvWriter csv(g.out);
  csv.row("category", "count");
  for (std::size_t i = 0; i < st.names.size(); ++i) {
    fmt::print(out, "{:<12} {:>8}\n", st.names[i], st.per_category[i]);
    csv.row(st.names[i], st.per_category[i]);
  }
  fmt::print(out, "{:<12} {:>8}\n{:<12} {:>8}\n{:<12} {:>8.2f}\n", "total", st.total, "images",
             st.images, "labels/image", st.labels_per_image);
  csv.row("total", st.total);
  csv.row("images", st.images);
  csv.row("labels_per_image", st.labels_per_image);
  return kExitOk;
}

// --- losscheck ---------------------------------------------------------------

inline int cmd_losscheck(const Globals& g, std::ostream& out) {
  const auto checks = run_loss_selfcheck(g.seed);
  CsvWriter csv(g.out);
  csv.row("check", "value", "expected", "tolerance", "passed");
  bool ok = true;
  for (const auto& c : checks) {
    fmt::print(out, "{} {} value={:.3e}\n", c.passed() ? "[ok]  " : "[FAIL]", c.name, c.value);
    csv.row(c.name, c.value, c.expected, c.tolerance, c.passed());
    ok = ok && c.passed();
  }
  if (!ok) throw ValidationError("loss self-check failed");
  return kExitOk;
}

}  // namespace cli

/// Runs one command. `args` excludes the program name.
inline int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semantic line segment tools", "semls"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_config("--config", "", "Key-value configuration file (TOML/INI)");

  cli::Globals g;
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--out", g.out, "CSV output path");
  app.add_option("--categories", g.categories, "Category names, in index order")->delimiter(',');

  cli::AclArgs acl_a;
  auto* acl_cmd = app.add_subcommand("acl", "ACL of segment pairs");
  acl_cmd->add_option("--pairs", acl_a.pairs, "Pair file")->required();
  acl_cmd->add_flag("--category-agnostic", acl_a.category_agnostic, "Score pairs across categories");

  cli::EvalArgs eval_a;
  auto* eval_cmd = app.add_subcommand("eval", "mAP@0.5 and mAP3@0.5");
  eval_cmd->add_option("--gt", eval_a.gt, "Ground-truth annotations")->required();
  eval_cmd->add_option("--det", eval_a.det, "Detections with scores")->required();

  cli::RepeatArgs rep_a;
  auto* rep_cmd = app.add_subcommand("repeat", "Repeatability under an affine warp");
  rep_cmd->add_option("--dets-a", rep_a.dets_a, "Detections in the source images")->required();
  rep_cmd->add_option("--dets-b", rep_a.dets_b,
                      "Detections in the warped images (default: warp --dets-a)");
  rep_cmd->add_option("--transform", rep_a.transform, "Transform file (default: sampled)");
  rep_cmd->add_flag("--category-agnostic", rep_a.category_agnostic, "Score pairs across categories");
  rep_cmd->add_flag("--clip", rep_a.clip, "Clip warped segments to the image");

  cli::RefineArgs ref_a;
  auto* ref_cmd = app.add_subcommand("refine", "Snap labels to gradient candidates");
  ref_cmd->add_option("--annotations", ref_a.annotations, "Labels to refine")->required();
  auto* img_opt = ref_cmd->add_option("--image", ref_a.image, "PGM image (single-image file)");
  auto* dir_opt = ref_cmd->add_option("--image-dir", ref_a.image_dir, "Directory of <id>.pgm");
  auto* cand_opt = ref_cmd->add_option("--candidates", ref_a.candidates, "Candidate segments");
  img_opt->excludes(dir_opt)->excludes(cand_opt);
  dir_opt->excludes(cand_opt);
  ref_cmd->add_option("--refined", ref_a.refined, "Output annotation file");
  ref_cmd->add_option("--threshold", ref_a.threshold, "ACL needed to replace a label");

  cli::ProjerrArgs pe_a;
  auto* pe_cmd = app.add_subcommand("projerr", "Line re-projection error over triplets");
  pe_cmd->add_option("--annotations", pe_a.annotations, "Labels with track ids")->required();
  pe_cmd->add_option("--calibration", pe_a.calibration, "Calibration file")->required();
  pe_cmd->add_option("--triplets", pe_a.triplets, "Triplet file")->required();

  cli::LcdArgs lcd_a;
  auto* lcd_cmd = app.add_subcommand("lcd", "Loop closure detection");
  lcd_cmd->add_option("--query", lcd_a.query, "Query frames")->required();
  lcd_cmd->add_option("--db", lcd_a.db, "Database frames")->required();
  lcd_cmd->add_option("--poses", lcd_a.poses, "Frame positions for ground truth");
  lcd_cmd->add_option("--roc", lcd_a.roc, "RoC CSV output path");
  lcd_cmd->add_option("--d-loop", lcd_a.d_loop, "Loop distance in meters");
  lcd_cmd->add_flag("--keep-self", lcd_a.keep_self, "Allow a query to match its own id");

  cli::StatsArgs st_a;
  auto* st_cmd = app.add_subcommand("stats", "Per-category label counts");
  st_cmd->add_option("--annotations", st_a.annotations, "Annotation file")->required();

  auto* lc_cmd = app.add_subcommand("losscheck", "Loss and decoding self-check");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "semls: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*ref_cmd && ref_a.image.empty() && ref_a.image_dir.empty() && ref_a.candidates.empty()) {
      err << "semls refine: one of --image, --image-dir or --candidates is required\n";
      return kExitUsage;
    }
    if (*acl_cmd) return cli::cmd_acl(g, acl_a, out);
    if (*eval_cmd) return cli::cmd_eval(g, eval_a, out);
    if (*rep_cmd) return cli::cmd_repeat(g, rep_a, out);
    if (*ref_cmd) return cli::cmd_refine(g, ref_a, out);
    if (*pe_cmd) return cli::cmd_projerr(g, pe_a, out);
    if (*lcd_cmd) return cli::cmd_lcd(g, lcd_a, out);
    if (*st_cmd) return cli::cmd_stats(g, st_a, out);
    if (*lc_cmd) return cli::cmd_losscheck(g, out);
  } catch (const DegenerateError& e) {
    err << "semls: degenerate data: " << e.what() << '\n';
    return kExitDegenerate;
  } catch (const ValidationError& e) {
    err << "semls: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ShapeError& e) {
    err << "semls: " << e.what() << '\n';
    return kExitValidation;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace semls
