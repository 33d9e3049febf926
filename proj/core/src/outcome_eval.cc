#include "spiro/outcome_eval.h"

#include <algorithm>
#include <fmt/format.h>

#include "spiro/error.h"
#include "spiro/parallel.h"
#include "spiro/rng.h"

namespace spiro {
namespace {

constexpr char kModule[] = "outcome_eval";
constexpr std::size_t kMinReplicates = 100;

// Twice the concordant-pair count over sorted scores; ties contribute one
// (half a pair, doubled).
std::uint64_t TwiceConcordant(std::vector<LabeledScore>& data) {
  std::sort(data.begin(), data.end(),
            [](const LabeledScore& a, const LabeledScore& b) {
              return a.score < b.score;
            });
  std::uint64_t twice = 0;
  std::uint64_t negatives_below = 0;
  for (std::size_t i = 0; i < data.size();) {
    std::size_t j = i;
    std::uint64_t pos = 0, neg = 0;
    while (j < data.size() && data[j].score == data[i].score) {
      (data[j].label ? pos : neg)++;
      ++j;
    }
    twice += 2 * pos * negatives_below + pos * neg;
    negatives_below += neg;
    i = j;
  }
  return twice;
}

std::uint64_t Fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Concordance CountConcordance(std::span<const LabeledScore> data) {
  std::size_t n_pos = 0;
  for (const auto& d : data) n_pos += d.label ? 1 : 0;
  const std::size_t n_neg = data.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw DataError(kModule,
                    fmt::format("AUC needs both classes (positives {}, "
                                "negatives {})",
                                n_pos, n_neg));
  }
  std::vector<LabeledScore> sorted(data.begin(), data.end());
  return {TwiceConcordant(sorted), static_cast<std::uint64_t>(n_pos) * n_neg};
}

double Concordance::Auc() const {
  return static_cast<double>(twice_concordant) /
         (2.0 * static_cast<double>(pairs));
}

double Auc(std::span<const LabeledScore> data) {
  return CountConcordance(data).Auc();
}

std::string_view ToString(Orientation orientation) {
  switch (orientation) {
    case Orientation::kAuto:
      return "auto";
    case Orientation::kHigher:
      return "higher";
    case Orientation::kLower:
      return "lower";
  }
  return "auto";
}

AucInterval BootstrapAuc(std::span<const LabeledScore> data,
                         const AucBootstrapOptions& options) {
  if (options.replicates < kMinReplicates) {
    throw ConfigError(kModule,
                      fmt::format("bootstrap needs at least {} replicates, got "
                                  "{}",
                                  kMinReplicates, options.replicates));
  }
  AucInterval out;
  out.auc = Auc(data);
  std::vector<LabeledScore> pos, neg;
  for (const auto& d : data) (d.label ? pos : neg).push_back(d);

  std::vector<double> aucs(options.replicates);
  ParallelFor(options.replicates, options.threads, [&](std::size_t r) {
    CounterRng rng(StreamKey(options.seed, r));
    std::vector<LabeledScore> sample;
    sample.reserve(data.size());
    for (std::size_t i = 0; i < pos.size(); ++i) {
      sample.push_back(pos[rng.Index(pos.size())]);
    }
    for (std::size_t i = 0; i < neg.size(); ++i) {
      sample.push_back(neg[rng.Index(neg.size())]);
    }
    aucs[r] = static_cast<double>(TwiceConcordant(sample)) /
              (2.0 * static_cast<double>(pos.size()) *
               static_cast<double>(neg.size()));
  });
  const Interval ci = PercentileInterval(std::move(aucs), options.coverage);
  out.ci_low = std::min(ci.low, out.auc);
  out.ci_high = std::max(ci.high, out.auc);
  return out;
}

std::vector<EvalResult> EvaluatePanel(std::span<const Participant> cohort,
                                      const TableSet& tables,
                                      std::span<const ScoreDefinition> scores,
                                      std::span<const OutcomeSelector> outcomes,
                                      const EvalOptions& options) {
  std::vector<EvalResult> results;
  for (const auto& def : scores) {
    std::vector<std::optional<double>> values(cohort.size());
    for (std::size_t i = 0; i < cohort.size(); ++i) {
      values[i] = ComputeScore(def, cohort[i], tables);
    }
    for (const auto& sel : outcomes) {
      EvalResult res;
      res.score_name = def.name;
      res.outcome_name = sel.label;
      std::vector<LabeledScore> data;
      for (std::size_t i = 0; i < cohort.size(); ++i) {
        if (!values[i]) continue;
        const std::optional<bool> y = sel.Resolve(cohort[i]);
        if (!y) continue;
        data.push_back({*values[i], *y});
        (*y ? res.n_pos : res.n_neg)++;
      }
      try {
        Orientation orientation = options.orientation;
        if (orientation == Orientation::kAuto) {
          orientation =
              Auc(data) >= 0.5 ? Orientation::kHigher : Orientation::kLower;
        }
        if (orientation == Orientation::kLower) {
          for (auto& d : data) d.score = -d.score;
        }
        AucBootstrapOptions boot = options.bootstrap;
        boot.seed = StreamKey(options.bootstrap.seed, Fnv1a(def.name),
                              Fnv1a(sel.label));
        const AucInterval ci = BootstrapAuc(data, boot);
        res.auc = ci.auc;
        res.ci_low = ci.ci_low;
        res.ci_high = ci.ci_high;
        res.orientation = orientation;
        res.ok = true;
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        res.error = e.what();
      }
      results.push_back(std::move(res));
    }
  }
  return results;
}

}  // namespace spiro
