#ifndef SPIRO_OUTCOME_EVAL_H_
#define SPIRO_OUTCOME_EVAL_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spiro/cohort.h"
#include "spiro/scoring.h"
#include "spiro/stats.h"
#include "spiro/table_set.h"

namespace spiro {

struct LabeledScore {
  double score = 0.0;
  bool label = false;
};

// Exact pair counts behind the AUC: twice the number of concordant
// positive-negative pairs (a tie counts once), and the number of pairs.
struct Concordance {
  std::uint64_t twice_concordant = 0;
  std::uint64_t pairs = 0;
  double Auc() const;
};

// Throws DataError unless both classes are present.
Concordance CountConcordance(std::span<const LabeledScore> data);

// Mann-Whitney concordance P(score_pos > score_neg) + P(tie) / 2, by sorting
// and walking tie blocks. Exact: the concordant-pair count is accumulated in
// integers. Throws DataError unless both classes are present.
double Auc(std::span<const LabeledScore> data);

struct AucInterval {
  double auc = 0.5;
  double ci_low = 0.5;
  double ci_high = 0.5;
};

struct AucBootstrapOptions {
  std::size_t replicates = 1000;
  std::uint64_t seed = 0;
  double coverage = 0.95;
  int threads = 1;
};

// Percentile interval over resamples that redraw positives and negatives
// separately at their original counts. The interval is widened, if needed,
// to contain the point estimate. Requires replicates >= 100.
AucInterval BootstrapAuc(std::span<const LabeledScore> data,
                         const AucBootstrapOptions& options);

// kLower: lower scores indicate the positive outcome, so AUC is computed on
// the negated score.
enum class Orientation { kAuto, kHigher, kLower };

std::string_view ToString(Orientation orientation);

struct EvalOptions {
  AucBootstrapOptions bootstrap;
  Orientation orientation = Orientation::kAuto;
};

struct EvalResult {
  std::string outcome_name;
  std::string score_name;
  double auc = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  Orientation orientation = Orientation::kHigher;  // as applied
  bool ok = false;
  std::string error;  // set when !ok
};

// Scores x outcomes, score-major. Participants lacking either the score or
// a resolvable outcome are left out of that cell. Under kAuto each cell
// picks the orientation giving AUC >= 0.5. A failing cell (e.g. one class
// only) is recorded with ok = false and the panel continues. Each cell's
// bootstrap stream is keyed by the seed and the cell's score and outcome
// labels, so a cell's interval does not depend on what else is in the panel.
std::vector<EvalResult> EvaluatePanel(std::span<const Participant> cohort,
                                      const TableSet& tables,
                                      std::span<const ScoreDefinition> scores,
                                      std::span<const OutcomeSelector> outcomes,
                                      const EvalOptions& options = {});

}  // namespace spiro

#endif  // SPIRO_OUTCOME_EVAL_H_
