#pragma once

#include "emofuse/alignment.hpp"
#include "emofuse/dataio/bundle.hpp"
#include "emofuse/dataio/folds.hpp"
#include "emofuse/dataio/model_file.hpp"
#include "emofuse/dataio/synth.hpp"
#include "emofuse/fusion/attention.hpp"
#include "emofuse/fusion/model.hpp"
#include "emofuse/numkit/gradcheck.hpp"
#include "emofuse/numkit/head.hpp"
#include "emofuse/numkit/kernels.hpp"
#include "emofuse/numkit/matrix.hpp"
#include "emofuse/numkit/optim.hpp"
#include "emofuse/train/metrics.hpp"
#include "emofuse/train/report.hpp"
#include "emofuse/train/trainer.hpp"
