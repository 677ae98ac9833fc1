#pragma once

#include "finality/actor.hpp"
#include "finality/chain.hpp"
#include "finality/errors.hpp"
#include "finality/node.hpp"
#include "finality/oracle.hpp"
#include "finality/pmf.hpp"
#include "finality/report.hpp"
#include "finality/sim.hpp"
#include "finality/validation.hpp"
