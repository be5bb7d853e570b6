#ifndef AMC_AMC_HPP
#define AMC_AMC_HPP

#include "amc/common.hpp"
#include "amc/signal/modulation.hpp"
#include "amc/signal/pulse.hpp"
#include "amc/channel/channel.hpp"
#include "amc/render/constellation.hpp"
#include "amc/render/pgm.hpp"
#include "amc/nn/tensor.hpp"
#include "amc/nn/ops.hpp"
#include "amc/nn/graph.hpp"
#include "amc/nn/optimizer.hpp"
#include "amc/nn/checkpoint.hpp"
#include "amc/model/fifnet.hpp"
#include "amc/harness/digest.hpp"
#include "amc/harness/config.hpp"
#include "amc/harness/dataset.hpp"
#include "amc/harness/evaluate.hpp"
#include "amc/harness/train.hpp"
#include "amc/harness/ablation.hpp"

#endif // AMC_AMC_HPP
