#pragma once

// Everything except the JSON-backed CLI layer (artifact_io.hpp, cli.hpp).

#include "density/approximators.hpp"
#include "density/builders.hpp"
#include "density/ce_stream.hpp"
#include "density/construction.hpp"
#include "density/errors.hpp"
#include "density/genericity.hpp"
#include "density/metrics.hpp"
#include "density/partial_decider.hpp"
#include "density/prioritysim.hpp"
#include "density/profile.hpp"
#include "density/rational.hpp"
#include "density/report.hpp"
#include "density/sequences.hpp"
#include "density/set_oracle.hpp"
