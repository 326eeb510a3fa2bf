#pragma once

#include "condprob/baselines.hpp"
#include "condprob/bounds.hpp"
#include "condprob/data.hpp"
#include "condprob/error.hpp"
#include "condprob/eval.hpp"
#include "condprob/hashing.hpp"
#include "condprob/kway.hpp"
#include "condprob/model_io.hpp"
#include "condprob/pecoc.hpp"
#include "condprob/regressor.hpp"
#include "condprob/synth.hpp"
#include "condprob/tree.hpp"
