#pragma once

#include "symrec/augment.hpp"
#include "symrec/classifier.hpp"
#include "symrec/config.hpp"
#include "symrec/dataset.hpp"
#include "symrec/diagnostics.hpp"
#include "symrec/error.hpp"
#include "symrec/eval.hpp"
#include "symrec/features.hpp"
#include "symrec/gtw.hpp"
#include "symrec/hash.hpp"
#include "symrec/mlp.hpp"
#include "symrec/pipeline.hpp"
#include "symrec/preprocess.hpp"
#include "symrec/recording.hpp"
#include "symrec/result.hpp"
#include "symrec/service.hpp"
#include "symrec/synthetic.hpp"
