#pragma once

// Convenience umbrella: the whole library.

#include "dicke/cache.hpp"
#include "dicke/contour.hpp"
#include "dicke/dynamics.hpp"
#include "dicke/eigensolver.hpp"
#include "dicke/errors.hpp"
#include "dicke/hilbert.hpp"
#include "dicke/io.hpp"
#include "dicke/meanfield.hpp"
#include "dicke/model.hpp"
#include "dicke/parallel.hpp"
#include "dicke/phase_diagram.hpp"
#include "dicke/version.hpp"
