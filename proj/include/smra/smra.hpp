#pragma once

#include "smra/core.hpp"
#include "smra/signal.hpp"
#include "smra/invariants.hpp"
#include "smra/orbit.hpp"
#include "smra/rrr.hpp"
#include "smra/em.hpp"
#include "smra/bispectrum_inversion.hpp"
#include "smra/sdp.hpp"
#include "smra/io.hpp"
#include "smra/experiments.hpp"
