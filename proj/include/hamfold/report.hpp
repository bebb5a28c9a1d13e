#pragma once

// CSV and JSON renderings of results. JSON keys keep insertion order so
// reports are stable byte for byte.

#include <string>

#include <json.hpp>

#include "hamfold/brackets.hpp"
#include "hamfold/dirac.hpp"
#include "hamfold/dynamics.hpp"
#include "hamfold/model.hpp"
#include "hamfold/multitime.hpp"

namespace hamfold::report {

using Json = nlohmann::ordered_json;

/// Round-trip exact %.17g; non-finite values as nan / inf / -inf.
std::string number(double x);

/// Header t,<coords>,p<canonical coords>,H0,residual,rF.
std::string trajectory_csv(const Trajectory& tr);

/// Header s,<times>,<q>,<p>,residual.
std::string path_csv(const MultiTimeSystem& sys, const PathResult& r);

Json to_json(const Error& e);
Json to_json(const Partition& p, const LagrangianSystem& sys);
Json to_json(const Classification& c);
Json to_json(const Matrix& m);
Json to_json(const AxiomReport& r);
Json to_json(const EquivalenceReport& r);
Json to_json(const IntegrabilityReport& r);
Json to_json(const ConstraintCount& c);

/// Summary of a run: sizes, endpoint, maxima of the per-step diagnostics.
Json trajectory_summary(const Trajectory& tr);

/// Writes text to a file, throwing io_error on failure.
void write_file(const std::string& path, const std::string& text);

/// dump(2) plus a trailing newline.
std::string dump(const Json& j);

}  // namespace hamfold::report
