#pragma once

#include "phonon_uq/analysis.hpp"
#include "phonon_uq/bandgap.hpp"
#include "phonon_uq/cache.hpp"
#include "phonon_uq/config.hpp"
#include "phonon_uq/dataset.hpp"
#include "phonon_uq/designs.hpp"
#include "phonon_uq/dispersion.hpp"
#include "phonon_uq/distributions.hpp"
#include "phonon_uq/eigensolver.hpp"
#include "phonon_uq/errors.hpp"
#include "phonon_uq/fem.hpp"
#include "phonon_uq/geometry.hpp"
#include "phonon_uq/material.hpp"
#include "phonon_uq/model.hpp"
#include "phonon_uq/orthopoly.hpp"
#include "phonon_uq/pce.hpp"
#include "phonon_uq/pipeline.hpp"
#include "phonon_uq/quadrature.hpp"
#include "phonon_uq/rng.hpp"
#include "phonon_uq/stats.hpp"
#include "phonon_uq/svg.hpp"
