#pragma once

#include "scc/analysis.hpp"
#include "scc/classical.hpp"
#include "scc/delay.hpp"
#include "scc/errors.hpp"
#include "scc/field.hpp"
#include "scc/io.hpp"
#include "scc/master.hpp"
#include "scc/matrix.hpp"
#include "scc/montecarlo.hpp"
#include "scc/net.hpp"
#include "scc/params.hpp"
#include "scc/quadrature.hpp"
#include "scc/random.hpp"
#include "scc/staircase.hpp"
#include "scc/wire.hpp"
#include "scc/worker.hpp"
