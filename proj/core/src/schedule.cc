#include <cmath>

#include "clc/error.h"
#include "clc/training.h"

namespace clc {

double lambda_at(const ScheduleConfig& schedule, int epoch) {
  if (schedule.mode == ScheduleMode::kConstant) {
    if (epoch < 0) throw InputError("epoch must be non-negative");
    return schedule.lambda_const;
  }
  if (schedule.total_epochs < 1) {
    throw InputError("triangular schedule needs total_epochs >= 1");
  }
  if (epoch < 0 || epoch > schedule.total_epochs) {
    throw InputError("epoch " + std::to_string(epoch) + " outside [0, " +
                     std::to_string(schedule.total_epochs) + "]");
  }
  // alpha * (1 - 2|E - E_total/2| / E_total), arranged so that the ratio is
  // exactly 1 at both ends and exactly 0 at the midpoint.
  const double total = schedule.total_epochs;
  const double ratio = 2.0 * std::abs(epoch - 0.5 * total) / total;
  return schedule.alpha * (1.0 - ratio);
}

}  // namespace clc
