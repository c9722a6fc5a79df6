#pragma once

// In-context re-ranking: attention-based document re-ranking with
// content-free calibration, plus evaluation and cost accounting.

#include "icr/attention.hpp"
#include "icr/backend.hpp"
#include "icr/bench.hpp"
#include "icr/commands.hpp"
#include "icr/complexity.hpp"
#include "icr/corpus_io.hpp"
#include "icr/error.hpp"
#include "icr/icra.hpp"
#include "icr/layout_json.hpp"
#include "icr/listwise.hpp"
#include "icr/metrics.hpp"
#include "icr/pipeline.hpp"
#include "icr/prompt_layout.hpp"
#include "icr/rng.hpp"
#include "icr/scoring.hpp"
#include "icr/synth.hpp"
#include "icr/tokenizer.hpp"
#include "icr/toy_model.hpp"
#include "icr/trec_io.hpp"
#include "icr/viz.hpp"
