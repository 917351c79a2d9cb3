/*
 * Copyright (c) 2026, The corrfilt Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "corrfilt/bootstrap.hpp"
#include "corrfilt/dendrogram.hpp"
#include "corrfilt/error.hpp"
#include "corrfilt/evaluation.hpp"
#include "corrfilt/filters.hpp"
#include "corrfilt/hclust.hpp"
#include "corrfilt/hnfm.hpp"
#include "corrfilt/io.hpp"
#include "corrfilt/kl.hpp"
#include "corrfilt/linalg.hpp"
#include "corrfilt/networks.hpp"
#include "corrfilt/random.hpp"
#include "corrfilt/special.hpp"
