#pragma once

#include <span>
#include <string>
#include <vector>

#include "telezoom/trainer.hpp"

namespace telezoom {

struct RefineConfig {
  double theta_far = 0.5;    // targets further apart than this (x target std) ...
  double theta_close = 0.1;  // ... while basic outputs are closer than this
  Exec exec = Exec::parallel;
};

/// Training windows whose coarse inputs the basic model cannot tell apart
/// but whose targets differ.
struct EquivalenceClass {
  std::vector<std::int64_t> member_ids;  // ascending
  CoarseBundle representative_input;     // input of the first member
  std::vector<FineSeries> targets;       // one per member, same order
};

/// Pairs (i, j) with rmse(target) > theta_far*sigma and rmse(basic output) <
/// theta_close*sigma, closed transitively. Only classes of two or more are
/// returned. The basic model must carry a training mode in its metadata.
std::vector<EquivalenceClass> equivalence_test(const std::vector<WindowExample>& windows,
                                               const ImputationModel& basic, const RefineConfig& cfg = {});

/// Minimum of l_combine over the targets. The gradient (written into dz
/// when non-empty) flows through the first minimizer only.
double l_class(std::span<const double> out, const std::vector<std::vector<double>>& targets, double emd_weight,
               std::span<double> dz = {});

/// Gives every class member the whole class target set (normalized by
/// target_scale). Overlapping classes are merged first. Inputs and the
/// sample count are left unchanged. Returns how many samples were touched.
std::size_t refine_samples(std::vector<Sample>& samples, const std::vector<EquivalenceClass>& classes,
                           const std::vector<WindowExample>& windows, double target_scale);

/// Merges classes that share a member.
std::vector<EquivalenceClass> merge_overlapping(const std::vector<EquivalenceClass>& classes,
                                                const std::vector<WindowExample>& windows);

/// Sidecar file with the member ids of every class.
std::string classes_to_json(const std::vector<EquivalenceClass>& classes, const std::string& dataset_hash = "");
/// Rebuilds classes from a sidecar against the windows they refer to.
std::vector<EquivalenceClass> classes_from_json(const std::string& text, const std::vector<WindowExample>& windows);

}  // namespace telezoom
