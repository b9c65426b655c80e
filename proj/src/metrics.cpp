#include <cmath>

#include "metacast/data.hpp"

namespace metacast {

ConfusionStats stats_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn, std::uint64_t tn) {
    ConfusionStats s{tp, fp, fn, tn};
    const auto d = [](std::uint64_t v) { return static_cast<double>(v); };

    if (tp + fp == 0 || tp + fn == 0 || tp == 0) {
        // Precision or recall is 0/0, or both are zero so P + R = 0.
        s.f1 = 0.0;
        s.f1_defined = false;
    } else {
        const double precision = d(tp) / d(tp + fp);
        const double recall = d(tp) / d(tp + fn);
        s.f1 = 2.0 * precision * recall / (precision + recall);
    }

    const double denom = d(tp + fp) * d(tp + fn) * d(tn + fp) * d(tn + fn);
    if (denom == 0.0) {
        s.mcc = 0.0;
        s.mcc_defined = false;
    } else {
        s.mcc = (d(tp) * d(tn) - d(fp) * d(fn)) / std::sqrt(denom);
    }
    return s;
}

ConfusionStats confusion_stats(const IndexSet& selected, const std::vector<bool>& labels) {
    std::vector<char> chosen(labels.size(), 0);
    for (std::uint32_t idx : selected) {
        if (idx >= labels.size()) {
            throw InvalidInput("selected index " + std::to_string(idx) + " is out of range");
        }
        chosen[idx] = 1;
    }
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t j = 0; j < labels.size(); ++j) {
        if (chosen[j]) {
            labels[j] ? ++tp : ++fp;
        } else {
            labels[j] ? ++fn : ++tn;
        }
    }
    return stats_from_counts(tp, fp, fn, tn);
}

}  // namespace metacast
