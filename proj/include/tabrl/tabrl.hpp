#pragma once

#include "tabrl/bellman.hpp"
#include "tabrl/chain.hpp"
#include "tabrl/errors.hpp"
#include "tabrl/experiments.hpp"
#include "tabrl/hard_mdp.hpp"
#include "tabrl/io.hpp"
#include "tabrl/learners.hpp"
#include "tabrl/linalg.hpp"
#include "tabrl/mdp.hpp"
#include "tabrl/parallel.hpp"
#include "tabrl/rng.hpp"
#include "tabrl/sampling.hpp"
#include "tabrl/schedule.hpp"
#include "tabrl/solve.hpp"
