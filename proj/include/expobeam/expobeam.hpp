#pragma once

#include "expobeam/channel.hpp"
#include "expobeam/config.hpp"
#include "expobeam/control.hpp"
#include "expobeam/em.hpp"
#include "expobeam/errors.hpp"
#include "expobeam/exposure.hpp"
#include "expobeam/geometry.hpp"
#include "expobeam/io.hpp"
#include "expobeam/oracles.hpp"
#include "expobeam/quadrature.hpp"
#include "expobeam/sim.hpp"
#include "expobeam/thermal.hpp"
#include "expobeam/validate.hpp"
