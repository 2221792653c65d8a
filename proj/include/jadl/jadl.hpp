#pragma once

// Jitter-adaptive dictionary learning: signal-length atoms that may shift by
// small per-trial latencies, learned by alternating a constrained sparse
// coding step (LARS with a one-shift-per-atom blocking rule) with a
// shift-aware block-coordinate dictionary update. Includes plain dictionary
// learning (identity shift set), a PCA baseline, a synthetic multi-trial
// benchmark generator, and the evaluation metrics.

#include "jadl/correlate.hpp"
#include "jadl/dict_update.hpp"
#include "jadl/errors.hpp"
#include "jadl/io.hpp"
#include "jadl/lars.hpp"
#include "jadl/learn.hpp"
#include "jadl/metrics.hpp"
#include "jadl/parallel.hpp"
#include "jadl/pca.hpp"
#include "jadl/random.hpp"
#include "jadl/signal.hpp"
#include "jadl/synth.hpp"
