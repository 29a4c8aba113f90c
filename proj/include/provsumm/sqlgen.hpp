#pragma once

#include <string>

#include "provsumm/datalog.hpp"
#include "provsumm/relstore.hpp"

namespace provsumm {

// Renders the WHYNOT sampling pipeline as SQL text: one shared view with the
// query's existing answers, then five chained views per rule.
//
//   q_bind_<rule>    per-variable row-numbered random draws zipped on rn,
//                    comparison goals applied as filters
//   q_der_<rule>     anti-join keeping bindings whose head tuple is missing
//   q_sample_<rule>  outer joins deriving one truth flag per literal goal,
//                    truncated to the target sample size
//   q_lca_<rule>     self-join pairing rows with equal flags; agreeing
//                    columns survive, disagreeing ones become NULL
//   q_match_<rule>   per-pattern match counts over the sampled rows
//
// The text is parameterized (:oversample_size, :sample_size) and is never
// executed here; it documents how the pipeline maps onto a relational engine.
// Rules with no free variables contribute a comment instead of a pipeline.
// Requires a WHYNOT question (E_CONFIG otherwise).
std::string emit_sql(const Query& query, const Database& db,
                     const ProvenanceQuestion& question);

}  // namespace provsumm
