// Copyright 2026 The SimRec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include "simrec/adam.hpp"
#include "simrec/autodiff.hpp"
#include "simrec/common.hpp"
#include "simrec/cooc.hpp"
#include "simrec/data.hpp"
#include "simrec/dataset_io.hpp"
#include "simrec/eval.hpp"
#include "simrec/gradcheck.hpp"
#include "simrec/model.hpp"
#include "simrec/sparse.hpp"
#include "simrec/synth.hpp"
#include "simrec/tensor.hpp"
#include "simrec/theory.hpp"
#include "simrec/train.hpp"
#include "simrec/viz.hpp"
