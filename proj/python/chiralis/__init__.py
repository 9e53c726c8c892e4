# Copyright 2026 The Chiralis Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


"""Chirality features for 3D shapes."""

from ._core import (
    ChiralPair,
    Error,
    FormatError,
    IoError,
    NetworkParams,
    NumericError,
    ParameterError,
    TriangleMesh,
    ValidationError,
    augment_features,
    chirality_accuracy,
    gradients,
    infer,
    kmeans,
    knn_edges,
    load_mesh,
    make_bilateral_mesh,
    match_nearest,
    pck_curve,
    read_checkpoint,
    read_vertex_features,
    save_off,
    synthetic_pair,
    total_loss,
    train,
    uniform_grid,
    write_checkpoint,
    write_vertex_features,
)

__version__ = "0.1.0"
