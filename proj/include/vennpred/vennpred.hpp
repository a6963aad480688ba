#pragma once

#include "vennpred/data.hpp"
#include "vennpred/errors.hpp"
#include "vennpred/featsel.hpp"
#include "vennpred/harness.hpp"
#include "vennpred/metrics.hpp"
#include "vennpred/mlp.hpp"
#include "vennpred/random.hpp"
#include "vennpred/rebalance.hpp"
#include "vennpred/venn.hpp"
