#pragma once

#include "softlogic/matrix.hpp"
#include "softlogic/logit.hpp"
#include "softlogic/belief_table.hpp"
#include "softlogic/nary.hpp"
#include "softlogic/logicgen.hpp"
#include "softlogic/network.hpp"
#include "softlogic/optim.hpp"
#include "softlogic/train.hpp"
#include "softlogic/io.hpp"
#include "softlogic/experiment.hpp"
#include "softlogic/verify.hpp"
