#pragma once

#include "pilotpower/errors.hpp"
#include "pilotpower/stats.hpp"
#include "pilotpower/policies.hpp"
#include "pilotpower/switching.hpp"
#include "pilotpower/hetnet.hpp"
#include "pilotpower/arm_space.hpp"
#include "pilotpower/environment.hpp"
#include "pilotpower/bounds.hpp"
#include "pilotpower/baselines.hpp"
#include "pilotpower/experiment.hpp"
