#include "cvbev/evaluation.hpp"

#include <cstdio>
#include <sstream>

#include "json.hpp"

namespace cvbev {

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes)
    : k_(num_classes), counts_(num_classes * num_classes, 0) {
  if (num_classes == 0) throw Error("confusion matrix needs at least one class");
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t s = 0;
  for (auto v : counts_) s += v;
  return s;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < k_; ++i) s += counts_[i * k_ + i];
  return s;
}

void ConfusionMatrix::accumulate(std::span<const std::uint8_t> gt,
                                 std::span<const std::uint8_t> pred,
                                 std::optional<std::uint8_t> ignore_label) {
  if (gt.size() != pred.size()) {
    throw Error("accumulate: ground truth has " + std::to_string(gt.size()) +
                " pixels but prediction has " + std::to_string(pred.size()));
  }
  // Validate before touching the counts so a bad raster leaves them unchanged.
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (ignore_label && (gt[i] == *ignore_label || pred[i] == *ignore_label)) continue;
    if (gt[i] >= k_ || pred[i] >= k_) {
      throw Error("accumulate: label " + std::to_string(std::max(gt[i], pred[i])) +
                  " is out of range for " + std::to_string(k_) + " classes");
    }
  }
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (ignore_label && (gt[i] == *ignore_label || pred[i] == *ignore_label)) continue;
    ++counts_[gt[i] * k_ + pred[i]];
  }
}

void ConfusionMatrix::accumulate(const LabelRaster& gt, const LabelRaster& pred,
                                 std::optional<std::uint8_t> ignore_label) {
  if (!gt.same_shape(pred)) {
    throw Error("accumulate: raster shapes differ (" + std::to_string(gt.rows) + "x" +
                std::to_string(gt.cols) + " vs " + std::to_string(pred.rows) + "x" +
                std::to_string(pred.cols) + ")");
  }
  accumulate(std::span<const std::uint8_t>(gt.data), std::span<const std::uint8_t>(pred.data),
             ignore_label);
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.k_ != k_) throw Error("merge: class counts differ");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

IouResult miou(const ConfusionMatrix& cm) {
  const std::size_t k = cm.num_classes();
  IouResult out;
  out.per_class.resize(k);
  double sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    std::uint64_t fp = 0, fn = 0;
    for (std::size_t o = 0; o < k; ++o) {
      if (o == c) continue;
      fp += cm.at(o, c);
      fn += cm.at(c, o);
    }
    const std::uint64_t tp = cm.at(c, c);
    const std::uint64_t denom = tp + fp + fn;
    if (denom == 0) continue;
    const double iou = static_cast<double>(tp) / static_cast<double>(denom);
    out.per_class[c] = iou;
    sum += iou;
    ++out.defined;
  }
  out.mean = out.defined == 0 ? 0.0 : sum / static_cast<double>(out.defined);
  return out;
}

double accuracy(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw Error("accuracy: confusion matrix is empty");
  return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", fraction * 100.0);
  return buf;
}

ClassTable per_class_table(const ConfusionMatrix& cm, const std::vector<std::string>& class_names,
                           const std::string& method) {
  if (class_names.size() != cm.num_classes()) {
    throw Error("per_class_table: " + std::to_string(class_names.size()) +
                " class names for " + std::to_string(cm.num_classes()) + " classes");
  }
  const IouResult iou = miou(cm);

  std::ostringstream header, row;
  header << "| Method";
  row << "| " << method;
  nlohmann::ordered_json per_class = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    header << " | " << class_names[c];
    if (iou.per_class[c]) {
      row << " | " << format_percent(*iou.per_class[c]);
      per_class[class_names[c]] = std::stod(format_percent(*iou.per_class[c]));
    } else {
      row << " | —";
      per_class[class_names[c]] = nullptr;
    }
  }
  header << " | mIoU |";
  row << " | " << format_percent(iou.mean) << " |";

  std::ostringstream rule;
  rule << "|---";
  for (std::size_t c = 0; c <= class_names.size(); ++c) rule << "|---";
  rule << "|";

  nlohmann::ordered_json j;
  j["method"] = method;
  j["per_class_iou"] = per_class;
  j["miou"] = std::stod(format_percent(iou.mean));
  return {header.str() + "\n" + rule.str() + "\n" + row.str() + "\n", j.dump()};
}

}  // namespace cvbev
