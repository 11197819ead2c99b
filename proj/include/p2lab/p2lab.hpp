#pragma once

#include "p2lab/error.hpp"
#include "p2lab/mesh.hpp"
#include "p2lab/mesh_io.hpp"
#include "p2lab/weights.hpp"
#include "p2lab/assembly.hpp"
#include "p2lab/subspace.hpp"
#include "p2lab/linear_spectrum.hpp"
#include "p2lab/nonlinear_solvers.hpp"
#include "p2lab/verification.hpp"
#include "p2lab/properties.hpp"
#include "p2lab/config.hpp"
#include "p2lab/commands.hpp"
