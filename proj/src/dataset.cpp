#include "engage/dataset.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "engage/errors.hpp"

namespace engage {

namespace {

using ordered_json = nlohmann::ordered_json;

const char* kTypeFieldNames[kNumFeatureTypes] = {"emotional", "attentional", "upper_body"};

std::string snapshot_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "s%06d", index);
  return buf;
}

// Standard normal quantile by bisection on the CDF; deterministic and
// accurate to double precision.
double normal_quantile(double p) {
  double lo = -10.0, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double cdf = 0.5 * std::erfc(-mid / std::sqrt(2.0));
    if (cdf < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

[[noreturn]] void reject(const std::string& where, const std::string& what) {
  throw ValidationError("dataset: " + where + ": " + what);
}

int require_int(const ordered_json& j, const std::string& where, const std::string& key) {
  if (!j.contains(key) || !j[key].is_number_integer())
    reject(where, "missing or non-integer field '" + key + "'");
  return j[key].get<int>();
}

}  // namespace

std::vector<std::string> default_label_names(int n_classes) {
  if (n_classes == 2) return {"disengaged", "engaged"};
  if (n_classes == 3) return {"disengaged", "partially_engaged", "engaged"};
  std::vector<std::string> names;
  for (int c = 0; c < n_classes; ++c) names.push_back("class_" + std::to_string(c));
  return names;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("dataset: cannot open '" + path + "' for writing");
  const DatasetManifest& m = ds.manifest;
  ordered_json manifest = {{"record", "manifest"},
                           {"d_e", m.feature_dims[0]},
                           {"d_a", m.feature_dims[1]},
                           {"d_u", m.feature_dims[2]},
                           {"classes", m.n_classes},
                           {"snapshots", m.n_snapshots},
                           {"students_per_snapshot", m.students_per_snapshot},
                           {"seed", m.seed},
                           {"label_names", m.label_names}};
  out << manifest.dump() << "\n";
  for (const FeatureSnapshot& snap : ds.snapshots) {
    ordered_json students = ordered_json::array();
    for (const StudentRecord& s : snap.students) {
      ordered_json rec = {{"index", s.index}, {"label", s.label}};
      for (int t = 0; t < kNumFeatureTypes; ++t) rec[kTypeFieldNames[t]] = s.features[t];
      students.push_back(std::move(rec));
    }
    ordered_json line = {
        {"record", "snapshot"}, {"id", snap.snapshot_id}, {"students", std::move(students)}};
    out << line.dump() << "\n";
  }
  if (!out) throw ValidationError("dataset: write to '" + path + "' failed");
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("dataset: cannot open '" + path + "'");
  std::string line;
  int line_no = 0;
  Dataset ds;
  bool have_manifest = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& e) {
      reject("line " + std::to_string(line_no), std::string("parse error: ") + e.what());
    }
    const std::string record = j.value("record", "");
    if (!have_manifest) {
      if (record != "manifest") reject("line 1", "first record must be the manifest");
      DatasetManifest& m = ds.manifest;
      m.feature_dims = {require_int(j, "manifest", "d_e"), require_int(j, "manifest", "d_a"),
                        require_int(j, "manifest", "d_u")};
      m.n_classes = require_int(j, "manifest", "classes");
      m.n_snapshots = require_int(j, "manifest", "snapshots");
      m.students_per_snapshot = require_int(j, "manifest", "students_per_snapshot");
      if (j.contains("seed")) m.seed = j["seed"].get<std::uint64_t>();
      if (!j.contains("label_names") || !j["label_names"].is_array())
        reject("manifest", "missing field 'label_names'");
      m.label_names = j["label_names"].get<std::vector<std::string>>();
      for (int d : m.feature_dims)
        if (d < 1) reject("manifest", "feature dimensions must be >= 1");
      if (m.n_classes < 2) reject("manifest", "classes must be >= 2");
      if (m.n_snapshots < 1 || m.students_per_snapshot < 1)
        reject("manifest", "counts must be >= 1");
      if (static_cast<int>(m.label_names.size()) != m.n_classes)
        reject("manifest", "label_names must list one name per class");
      have_manifest = true;
      continue;
    }
    if (record != "snapshot")
      reject("line " + std::to_string(line_no), "unknown record type '" + record + "'");
    FeatureSnapshot snap;
    snap.snapshot_id = j.value("id", "");
    if (snap.snapshot_id.empty())
      reject("line " + std::to_string(line_no), "snapshot missing field 'id'");
    const std::string where = "snapshot " + snap.snapshot_id;
    if (!j.contains("students") || !j["students"].is_array())
      reject(where, "missing field 'students'");
    const int n = ds.manifest.students_per_snapshot;
    if (static_cast<int>(j["students"].size()) != n)
      reject(where, "expected " + std::to_string(n) + " students, got " +
                        std::to_string(j["students"].size()));
    std::vector<bool> seen(n, false);
    for (const ordered_json& sj : j["students"]) {
      StudentRecord s;
      s.index = require_int(sj, where, "index");
      if (s.index < 0 || s.index >= n)
        reject(where, "field 'index' = " + std::to_string(s.index) + " outside [0, " +
                          std::to_string(n) + ")");
      if (seen[s.index]) reject(where, "duplicate student index " + std::to_string(s.index));
      seen[s.index] = true;
      s.label = require_int(sj, where, "label");
      if (s.label < 0 || s.label >= ds.manifest.n_classes)
        reject(where, "field 'label' = " + std::to_string(s.label) + " outside [0, " +
                          std::to_string(ds.manifest.n_classes) + ")");
      for (int t = 0; t < kNumFeatureTypes; ++t) {
        const char* field = kTypeFieldNames[t];
        if (!sj.contains(field) || !sj[field].is_array())
          reject(where, std::string("missing field '") + field + "'");
        s.features[t] = sj[field].get<std::vector<double>>();
        if (static_cast<int>(s.features[t].size()) != ds.manifest.feature_dims[t])
          reject(where, std::string("field '") + field + "' has length " +
                            std::to_string(s.features[t].size()) + ", manifest says " +
                            std::to_string(ds.manifest.feature_dims[t]));
      }
      snap.students.push_back(std::move(s));
    }
    ds.snapshots.push_back(std::move(snap));
  }
  if (!have_manifest) reject(path, "empty file");
  if (static_cast<int>(ds.snapshots.size()) != ds.manifest.n_snapshots)
    reject(path, "manifest promises " + std::to_string(ds.manifest.n_snapshots) +
                     " snapshots, file has " + std::to_string(ds.snapshots.size()));
  return ds;
}

Dataset generate_synthetic(const SynthConfig& config) {
  if (config.n_students < 1) throw ValidationError("synth: n_students must be >= 1");
  if (config.n_snapshots < 1) throw ValidationError("synth: n_snapshots must be >= 1");
  if (config.n_classes < 2) throw ValidationError("synth: n_classes must be >= 2");
  if (config.rho_choices.empty()) throw ValidationError("synth: rho_choices must be nonempty");
  for (double rho : config.rho_choices)
    if (rho < 0.0 || rho > 1.0)
      throw ValidationError("synth: rho " + std::to_string(rho) + " outside [0, 1]");
  if (config.noise < 0.0) throw ValidationError("synth: noise must be >= 0");
  for (int t = 0; t < kNumFeatureTypes; ++t)
    if (config.feature_dims[t] < 2)
      throw ValidationError(std::string("synth: dimension for ") + feature_type_name(t) +
                            " must be >= 2");

  // Channel roles per type. Every signal channel reads out the same
  // per-student quantity, the deviation u_i = b_i - m: a student's own
  // features are rank-one in (b_i, m), so the group mood m (which carries
  // most of the label at high rho) is only recoverable by pooling deviations
  // across the snapshot. Types differ in readout gain:
  //   emotional:   ch0 = 1.0 * u
  //   attentional: ch0 = 0.5 * u   (least reliable type)
  //   upper_body:  ch0 = 0.8 * u
  // Per snapshot, each student independently loses body tracking with
  // probability kDropoutProb (occlusion, leaving the camera frame). A dropped
  // student's signal channels read sensor noise at the same scale as real
  // deviations instead of u, and channel 1 of the upper_body block carries a
  // positive tracking-loss flag on top of its usual content -- the tracker is
  // the one modality that reports its own lock state. Dropped students
  // contribute nothing but noise to any cross-student pool, so recovering the
  // group mood cleanly requires spotting the flag on one node of a student
  // and excluding that student's whole row from the pool before aggregation,
  // not repairing the mixture afterwards. Every channel additionally gets
  // noise * N(0,1); channels past the signal block are pure nuisance noise at
  // a per-type scale. Nuisance values are drawn per (student, channel), never
  // shared across a snapshot, so they cannot serve as a snapshot fingerprint
  // for memorising training labels.
  struct ChannelGains {
    double dev = 0.0;
  };
  auto gains_for = [](int type, int channel) -> ChannelGains {
    if (channel != 0) return {};
    switch (type) {
      case 0:
        return {1.0};
      case 1:
        return {0.5};
      case 2:
        return {0.8};
    }
    return {};
  };
  auto signal_channels = [](int) { return 1; };
  constexpr double kDropoutProb = 0.3;
  // Garbage scale per type, a bit above each type's clean signal-channel
  // spread so dropped rows genuinely poison a mean.
  constexpr double kDropoutNoise[kNumFeatureTypes] = {3.2, 1.7, 2.6};
  constexpr double kDropoutFlag = 3.0;
  constexpr int kFlagType = 2;  // upper_body reports its own tracking state
  const double nuisance_noise[kNumFeatureTypes] = {1.0, 2.0, 1.0};

  Rng rng(config.seed);

  Dataset ds;
  ds.manifest.feature_dims = config.feature_dims;
  ds.manifest.n_classes = config.n_classes;
  ds.manifest.n_snapshots = config.n_snapshots;
  ds.manifest.students_per_snapshot = config.n_students;
  ds.manifest.seed = config.seed;
  ds.manifest.label_names = default_label_names(config.n_classes);

  std::vector<double> thresholds;
  for (int k = 1; k < config.n_classes; ++k)
    thresholds.push_back(normal_quantile(static_cast<double>(k) / config.n_classes));

  for (int snap_idx = 0; snap_idx < config.n_snapshots; ++snap_idx) {
    const double rho =
        config.rho_choices[rng.below(config.rho_choices.size())];
    const double mood = rng.normal();
    const double sigma_z = std::sqrt((1.0 - rho) * (1.0 - rho) + rho * rho);

    FeatureSnapshot snap;
    snap.snapshot_id = snapshot_name(snap_idx);
    for (int i = 0; i < config.n_students; ++i) {
      const double base = rng.normal();
      const double z = (1.0 - rho) * base + rho * mood;
      const bool dropped = rng.uniform() < kDropoutProb;
      StudentRecord s;
      s.index = i;
      const double standardized = z / sigma_z;
      s.label = 0;
      for (double thr : thresholds)
        if (standardized >= thr) ++s.label;
      for (int t = 0; t < kNumFeatureTypes; ++t) {
        s.features[t].resize(config.feature_dims[t]);
        for (int ch = 0; ch < config.feature_dims[t]; ++ch) {
          const ChannelGains g = gains_for(t, ch);
          double v;
          if (dropped && ch < signal_channels(t)) {
            v = kDropoutNoise[t] * rng.normal();
          } else {
            v = g.dev * (base - mood);
          }
          if (ch >= signal_channels(t)) v += nuisance_noise[t] * rng.normal();
          if (dropped && t == kFlagType && ch == 1) v += kDropoutFlag;
          v += config.noise * rng.normal();
          s.features[t][ch] = v;
        }
      }
      snap.students.push_back(std::move(s));
    }
    ds.snapshots.push_back(std::move(snap));
  }
  return ds;
}

std::vector<double> class_weights(const std::vector<int>& labels, int n_classes) {
  if (n_classes < 2) throw ValidationError("class_weights: need at least 2 classes");
  std::vector<long long> counts(n_classes, 0);
  for (int y : labels) {
    if (y < 0 || y >= n_classes)
      throw ValidationError("class_weights: label " + std::to_string(y) + " outside [0, " +
                            std::to_string(n_classes) + ")");
    ++counts[y];
  }
  for (int c = 0; c < n_classes; ++c)
    if (counts[c] == 0)
      throw ValidationError("class_weights: class " + std::to_string(c) +
                            " absent from training labels");
  std::vector<double> w(n_classes);
  double total = 0.0;
  for (int c = 0; c < n_classes; ++c) {
    w[c] = 1.0 / static_cast<double>(counts[c]);
    total += w[c];
  }
  for (double& x : w) x *= static_cast<double>(n_classes) / total;
  return w;
}

Split split_dataset(int n_snapshots, const SplitSpec& spec) {
  if (n_snapshots < 1) throw ValidationError("split: empty dataset");
  if (spec.train_fraction <= 0.0 || spec.train_fraction > 1.0)
    throw ValidationError("split: train_fraction must be in (0, 1]");
  if (spec.subsample_fraction <= 0.0 || spec.subsample_fraction > 1.0)
    throw ValidationError("split: subsample_fraction must be in (0, 1]");
  std::vector<int> ids(n_snapshots);
  std::iota(ids.begin(), ids.end(), 0);
  Rng rng(spec.seed);
  rng.shuffle(ids);
  const int n_train =
      static_cast<int>(std::llround(spec.train_fraction * n_snapshots));
  if (n_train < 1) throw ValidationError("split: train side is empty");
  Split out;
  out.train_ids.assign(ids.begin(), ids.begin() + n_train);
  out.test_ids.assign(ids.begin() + n_train, ids.end());
  if (spec.subsample_fraction < 1.0) {
    const int keep = std::max<int>(
        1, static_cast<int>(std::llround(spec.subsample_fraction * n_train)));
    out.train_ids.resize(keep);
  }
  return out;
}

std::vector<int> collect_labels(const Dataset& ds, const std::vector<int>& snapshot_ids) {
  std::vector<int> labels;
  for (int id : snapshot_ids)
    for (const StudentRecord& s : ds.snapshots[id].students) labels.push_back(s.label);
  return labels;
}

}  // namespace engage
