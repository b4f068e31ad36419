#pragma once

#include <vector>

#include "robcomp/attacks.hpp"
#include "robcomp/bounds.hpp"
#include "robcomp/io.hpp"
#include "robcomp/pruning.hpp"
#include "robcomp/training.hpp"

namespace robcomp {

/// Per-layer profiles (row, spectral, within-row, PQ index) and both operator-norm bounds.
Json audit_to_json(const Network& net, const KConfig& kcfg);

/// Layer bounds carry "thm1a_bound" (l_inf) or "thm1b_bound" (l2); the alignment
/// product is "eq8_product" or "eq9_product"; the risk bound is "cor1_rhs".
Json to_json(const BoundReport& report);
Json to_json(const AlignmentFactor& f);

/// Summary statistics; per-example secants/amplification/sv fractions when requested.
Json to_json(const AttackOutcome& outcome, bool per_example = false);
Json to_json(const UaeResult& uae);

Json to_json(const PruningPlan& plan);
Json to_json(const std::vector<RetentionPoint>& curve);

Json to_json(const std::vector<EpochRecord>& history);

Json to_json(const AttackConfig& cfg);

}  // namespace robcomp
