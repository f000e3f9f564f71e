#pragma once

#include "dectrig/errors.hpp"
#include "dectrig/linalg.hpp"
#include "dectrig/riccati_tau.hpp"
#include "dectrig/trigger_design.hpp"
#include "dectrig/sim_engine.hpp"
#include "dectrig/controller_feedback.hpp"
#include "dectrig/models.hpp"
#include "dectrig/io.hpp"
#include "dectrig/scenario.hpp"
#include "dectrig/verify.hpp"
#include "dectrig/app.hpp"
