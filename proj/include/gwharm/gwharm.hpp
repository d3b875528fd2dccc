#pragma once

#include "gwharm/conductance.hpp"
#include "gwharm/errors.hpp"
#include "gwharm/estimators.hpp"
#include "gwharm/io.hpp"
#include "gwharm/measures.hpp"
#include "gwharm/offspring.hpp"
#include "gwharm/parallel.hpp"
#include "gwharm/rde.hpp"
#include "gwharm/rng.hpp"
#include "gwharm/stats.hpp"
#include "gwharm/tree.hpp"
#include "gwharm/walk.hpp"
