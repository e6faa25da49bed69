// include/lrc/train.h

// Copyright 2026  The lrcnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef LRC_TRAIN_H_
#define LRC_TRAIN_H_

#include <cstdint>
#include <vector>

#include "lrc/dataset.h"
#include "lrc/model.h"

namespace lrc {

struct TrainOptions {
  int epochs = 10;
  double lr = 0.05;
  int batch_size = 16;
  uint64_t seed = 1;
};

struct EpochStats {
  double mean_loss = 0;
  double accuracy = 0;  // on the training batches, measured during the epoch
};

// Plain minibatch SGD on softmax cross-entropy.  The network must end with a
// softmax.  Parameters are updated in double precision and rounded to
// float32 on return.  Single-threaded; the visiting order comes from
// opts.seed, so identical inputs give identical weights.  Throws
// TrainingError if the loss becomes non-finite.
Network TrainToy(const Network& net, const ToyDataset& data, const TrainOptions& opts,
                 std::vector<EpochStats>* log = nullptr);

}  // namespace lrc

#endif  // LRC_TRAIN_H_
