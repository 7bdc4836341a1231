#pragma once

// Umbrella header for the SMGI kernel: typed meta-models, induced dynamics,
// admissibility certificates, generalization bounds, GSRM, fixtures from the
// constructive proofs, and the environment-growth protocol.

#include "smgi/bounds.hpp"
#include "smgi/certificates.hpp"
#include "smgi/config.hpp"
#include "smgi/dynamics.hpp"
#include "smgi/environment.hpp"
#include "smgi/errors.hpp"
#include "smgi/fixtures.hpp"
#include "smgi/gsrm.hpp"
#include "smgi/io.hpp"
#include "smgi/memory.hpp"
#include "smgi/metamodel.hpp"
#include "smgi/protocol.hpp"
#include "smgi/regimes.hpp"
#include "smgi/report.hpp"
#include "smgi/rng.hpp"
#include "smgi/state.hpp"
