#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cvbev/common.hpp"

namespace cvbev {

// Rows are ground truth, columns are prediction.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes);

  std::size_t num_classes() const { return k_; }
  std::uint64_t at(std::size_t gt, std::size_t pred) const { return counts_[gt * k_ + pred]; }
  std::uint64_t total() const;
  std::uint64_t trace() const;

  // Pixels where either raster holds `ignore_label` are skipped.
  void accumulate(std::span<const std::uint8_t> gt, std::span<const std::uint8_t> pred,
                  std::optional<std::uint8_t> ignore_label = std::nullopt);
  void accumulate(const LabelRaster& gt, const LabelRaster& pred,
                  std::optional<std::uint8_t> ignore_label = std::nullopt);
  void merge(const ConfusionMatrix& other);

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t k_;
  std::vector<std::uint64_t> counts_;
};

struct IouResult {
  std::vector<std::optional<double>> per_class;  // nullopt: no TP, FP or FN
  double mean = 0.0;                             // over defined classes only
  std::size_t defined = 0;
};

IouResult miou(const ConfusionMatrix& cm);

// Overall pixel accuracy.
double accuracy(const ConfusionMatrix& cm);

struct ClassTable {
  std::string text;
  std::string json;
};

// Per-class IoU percentages plus the mean, one row per method.
ClassTable per_class_table(const ConfusionMatrix& cm, const std::vector<std::string>& class_names,
                           const std::string& method = "Ours");

std::string format_percent(double fraction);

}  // namespace cvbev
