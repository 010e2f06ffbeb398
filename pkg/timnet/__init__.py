# -*- coding: utf-8 -*-
#
# Copyright (c) 2011 David Townshend
# Copyright (c) 2026 timnet contributors
#
# This program is free software; you can redistribute it and/or modify it
# under the terms of the GNU General Public License as published by the
# Free Software Foundation; either version 2 of the License, or (at your
# option) any later version.
#
# This program is distributed in the hope that it will be useful, but
# WITHOUT ANY WARRANTY; without even the implied warranty of MERCHANTABILITY
# or FITNESS FOR A PARTICULAR PURPOSE.  See the GNU General Public License
# for more details.
#
# You should have received a copy of the GNU General Public License along
# with this program; if not, write to the Free Software Foundation, Inc.,
# 675 Mass Ave, Cambridge, MA 02139, USA.

""" Text-image matching as a pre-training signal for image classifiers.

A matching network reads an image and a free-text report through two
encoder branches and learns, from the reports alone, whether the two
belong together.  No manual labels are involved.  The convolutional
feature extractor of its image branch is then copied into a downstream
classifier, which is fine-tuned on a small labeled set.

Everything runs on numpy: `_tensor` is a small reverse-mode autodiff
engine, `_layers` and `encoders` build the networks on top of it, and
`datagen` produces a synthetic corpus of images with reports so the whole
pipeline can run on a desk.

The data containers are `Record` and `Dataset`: typed, validated records
with field indexes, used for configs, corpora, pairs and metric reports.
"""

__version__ = '0.1.0'
__author__ = 'timnet contributors'

from ._field import Field, NotSet, Undefined
from ._record import Record, Dataset
from ._tensor import (Tensor, ShapeError, backward, no_grad, precision,
                      set_precision, get_precision, check_gradient)
from ._module import Module
from ._group import ParamGroup
from ._optim import Adam, AdamState, adam_step
from ._config import RunConfig, ConfigError, load_config, echo_config
from ._weights import (WeightFile, WeightFileError, save_weights,
                       load_weights, load_into, load_extractor)
from .encoders import (TextEncoder, ImageEncoder, FeatureExtractor,
                       VocabularyError, encode_text, encode_image,
                       extract_feature_maps)
from .matcher import (TimNet, MatchingHead, PairedDataset, build_pairs,
                      pretrain, evaluate_matching, match_forward)
from .downstream import (DownstreamModel, LabeledDataset, subsample_fraction,
                         finetune, predict, evaluate_downstream)
from .metrics import (MetricReport, UndefinedMetricError, auroc,
                      average_precision, binary_report, multilabel_report)
from .cam import Heatmap, compute_cam, compute_matching_cam, render_heatmap
from .datagen import (DataConfig, Corpus, Vocabulary, generate_corpus,
                      ingest_external, load_corpus, export_corpus)
