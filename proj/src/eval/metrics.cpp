#include "cropfuse/eval/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace cropfuse::eval {

std::vector<double> aggregate_probs(const LabelTaxonomy& taxonomy, std::span<const double> fine, Level level) {
    if (fine.size() != static_cast<std::size_t>(taxonomy.size())) {
        throw std::invalid_argument("probability vector length does not match the taxonomy");
    }
    std::vector<double> out(static_cast<std::size_t>(taxonomy.num_classes(level)), 0.0);
    for (std::size_t c = 0; c < fine.size(); ++c) {
        const CropCode g = taxonomy.aggregate(static_cast<CropCode>(c), level);
        if (g != kExcluded) out[static_cast<std::size_t>(g)] += fine[c];
    }
    return out;
}

std::vector<double> excluded_mass(const LabelTaxonomy& taxonomy, std::span<const double> fine) {
    const auto& groups = taxonomy.excluded_c12_groups();
    std::vector<double> out(groups.size(), 0.0);
    for (std::size_t c = 0; c < fine.size(); ++c) {
        const CropCode g = taxonomy.aggregate(static_cast<CropCode>(c), Level::C12);
        const auto it = std::find(groups.begin(), groups.end(), g);
        if (it != groups.end()) out[static_cast<std::size_t>(it - groups.begin())] += fine[c];
    }
    return out;
}

LevelPrediction predict_level(const LabelTaxonomy& taxonomy, std::span<const double> fine, Level level) {
    const auto probs = aggregate_probs(taxonomy, fine, level);
    LevelPrediction best{kExcluded, -1.0};
    for (std::size_t c = 0; c < probs.size(); ++c) {
        if (probs[c] > best.prob) best = {static_cast<CropCode>(c), probs[c]};
    }
    if (level == Level::C10) {
        for (double m : excluded_mass(taxonomy, fine)) {
            if (m > best.prob) best = {kExcluded, m};
        }
    }
    return best;
}

namespace {

double safe_div(double a, double b) { return b > 0 ? a / b : 0.0; }

double f1_of(double p, double r) { return p + r > 0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

EvalReport evaluate_classes(std::span<const CropCode> labels, std::span<const CropCode> predicted,
                            std::size_t num_classes) {
    if (labels.empty()) throw std::invalid_argument("empty evaluation set");
    if (labels.size() != predicted.size()) throw std::invalid_argument("label/prediction count mismatch");
    EvalReport r;
    r.num_classes = num_classes;
    r.evaluated = labels.size();
    r.total = labels.size();
    r.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
    r.classes.resize(num_classes);
    for (std::size_t c = 0; c < num_classes; ++c) r.classes[c].cls = static_cast<CropCode>(c);

    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const CropCode y = labels[i], p = predicted[i];
        if (y < 0 || static_cast<std::size_t>(y) >= num_classes) throw std::invalid_argument("label out of range");
        ++r.classes[static_cast<std::size_t>(y)].support;
        if (p == kExcluded) {
            ++r.excluded_predictions;
            continue;
        }
        if (p < 0 || static_cast<std::size_t>(p) >= num_classes) throw std::invalid_argument("prediction out of range");
        ++r.confusion[static_cast<std::size_t>(y)][static_cast<std::size_t>(p)];
        ++r.classes[static_cast<std::size_t>(p)].predicted;
        if (p == y) {
            ++r.classes[static_cast<std::size_t>(y)].true_positive;
            ++correct;
        }
    }

    std::size_t with_support = 0;
    for (auto& c : r.classes) {
        c.precision = safe_div(static_cast<double>(c.true_positive), static_cast<double>(c.predicted));
        c.recall = safe_div(static_cast<double>(c.true_positive), static_cast<double>(c.support));
        c.f1 = f1_of(c.precision, c.recall);
        if (c.support == 0) continue;
        ++with_support;
        r.macro_precision += c.precision;
        r.macro_recall += c.recall;
        r.macro_f1 += c.f1;
    }
    r.macro_precision /= static_cast<double>(with_support);
    r.macro_recall /= static_cast<double>(with_support);
    r.macro_f1 /= static_cast<double>(with_support);

    const auto n = static_cast<double>(labels.size());
    r.accuracy = static_cast<double>(correct) / n;
    // pooled counts: excluded predictions are misses but not false positives
    const double tp = static_cast<double>(correct);
    const double fp = n - tp - static_cast<double>(r.excluded_predictions);
    const double fn = n - tp;
    r.micro_f1 = f1_of(safe_div(tp, tp + fp), safe_div(tp, tp + fn));
    return r;
}

ThresholdResult threshold_filter(const PredictionSet& predictions, const LabelTaxonomy& taxonomy, Level level,
                                 double tau) {
    ThresholdResult out;
    std::size_t eligible = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (taxonomy.aggregate(predictions.labels[i], level) == kExcluded) continue;
        ++eligible;
        if (predict_level(taxonomy, predictions.row(i), level).prob > tau) out.kept.push_back(i);
    }
    out.coverage = eligible ? static_cast<double>(out.kept.size()) / static_cast<double>(eligible) : 0.0;
    return out;
}

EvalReport evaluate(const PredictionSet& predictions, const LabelTaxonomy& taxonomy, Level level, double threshold) {
    std::vector<CropCode> labels, predicted;
    std::size_t eligible = 0, dropped = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const CropCode y = taxonomy.aggregate(predictions.labels[i], level);
        if (y == kExcluded) {
            ++dropped;
            continue;
        }
        ++eligible;
        const auto p = predict_level(taxonomy, predictions.row(i), level);
        if (threshold > 0.0 && !(p.prob > threshold)) continue;
        labels.push_back(y);
        predicted.push_back(p.predicted);
    }
    if (labels.empty()) throw std::invalid_argument("empty evaluation set");
    EvalReport r = evaluate_classes(labels, predicted, static_cast<std::size_t>(taxonomy.num_classes(level)));
    r.level = level;
    r.total = eligible;
    r.dropped = dropped;
    r.threshold = threshold;
    r.coverage = static_cast<double>(r.evaluated) / static_cast<double>(eligible);
    return r;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

std::string report_tsv(const EvalReport& r) {
    std::ostringstream out;
    out << "level\t" << level_name(r.level) << '\n'
        << "evaluated\t" << r.evaluated << '\n'
        << "total\t" << r.total << '\n'
        << "dropped_excluded_labels\t" << r.dropped << '\n'
        << "threshold\t" << fmt(r.threshold) << '\n'
        << "coverage\t" << fmt(r.coverage) << '\n'
        << "accuracy\t" << fmt(r.accuracy) << '\n'
        << "micro_f1\t" << fmt(r.micro_f1) << '\n'
        << "macro_precision\t" << fmt(r.macro_precision) << '\n'
        << "macro_recall\t" << fmt(r.macro_recall) << '\n'
        << "macro_f1\t" << fmt(r.macro_f1) << '\n'
        << "excluded_predictions\t" << r.excluded_predictions << '\n'
        << "class\tsupport\tpredicted\tprecision\trecall\tf1\n";
    for (const auto& c : r.classes) {
        out << c.cls << '\t' << c.support << '\t' << c.predicted << '\t' << fmt(c.precision) << '\t' << fmt(c.recall)
            << '\t' << fmt(c.f1) << '\n';
    }
    return out.str();
}

std::string report_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["level"] = level_name(r.level);
    j["evaluated"] = r.evaluated;
    j["total"] = r.total;
    j["dropped_excluded_labels"] = r.dropped;
    j["threshold"] = r.threshold;
    j["coverage"] = r.coverage;
    j["accuracy"] = r.accuracy;
    j["micro_f1"] = r.micro_f1;
    j["macro_precision"] = r.macro_precision;
    j["macro_recall"] = r.macro_recall;
    j["macro_f1"] = r.macro_f1;
    j["excluded_predictions"] = r.excluded_predictions;
    auto& rows = j["classes"] = nlohmann::ordered_json::array();
    for (const auto& c : r.classes) {
        rows.push_back({{"class", c.cls},
                        {"support", c.support},
                        {"predicted", c.predicted},
                        {"true_positive", c.true_positive},
                        {"precision", c.precision},
                        {"recall", c.recall},
                        {"f1", c.f1}});
    }
    j["confusion"] = r.confusion;
    return j.dump(2) + "\n";
}

}  // namespace cropfuse::eval
