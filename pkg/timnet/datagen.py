# -*- coding: utf-8 -*-
#
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

""" A synthetic corpus of paired images and reports.

Each item is a procedurally drawn grayscale "radiograph" and a templated
report describing it.  Images are a dim background with soft normal
structures, zero to three bright findings and Gaussian noise.  Reports are
mostly boilerplate about normal anatomy, with one sentence per finding
naming its kind and location, sometimes hedged and sometimes left out.

Findings
--------

========  ==================================  ==============================
Kind      Drawn as                            Locations
========  ==================================  ==============================
opacity   bright disc in the quadrant         left/right x upper/lower
effusion  bright wedge in a bottom corner     left/right, always lower
device    bright line from the top centre     left/right x upper/lower
          to the quadrant centre
========  ==================================  ==============================

Every item is generated from its own random stream, seeded by
``(seed, index)``, so items can be produced in any order or in parallel.

The corpus can be exported to, and read back from, a directory of PGM
images and tab separated text files:

=================  ========================================================
File               Content
=================  ========================================================
images/<id>.pgm    8-bit binary PGM image
reports.tsv        ``id<TAB>report`` per line
labels.tsv         ``id<TAB>kinds`` per line, kinds as comma separated
                   indices into `KINDS` (empty for a normal item)
vocab.tsv          ``token<TAB>id`` per line
manifest.json      counts, seed and the generating configuration
=================  ========================================================
"""

import collections
import logging
import os
import re

import numpy as np
import simplejson

from ._field import Field
from ._record import Record
from .downstream import LabeledDataset, LabeledExample
from .encoders import PAD, UNKNOWN
from . import tools

KINDS = ('opacity', 'effusion', 'device')
SIDES = ('left', 'right')
ZONES = ('upper', 'lower')
SEVERITIES = ('mild', 'moderate', 'severe')

BOILERPLATE = (
    'the heart size is normal',
    'the mediastinal contours are within normal limits',
    'no pneumothorax is seen',
    'the osseous structures are intact',
    'the lungs are well expanded',
    'there is no acute bony abnormality',
    'the trachea is midline',
    'no free air is seen below the diaphragm',
    'comparison is made with the prior study',
    'the cardiomediastinal silhouette is stable',
)

TEMPLATES = {
    'opacity': ('{severity} opacity in the {side} {zone} lung',
                'there is a {severity} {side} {zone} zone opacity'),
    'effusion': ('{severity} {side} {zone} pleural effusion',
                 'a {severity} effusion is present at the {side} {zone} base'),
    'device': ('a {side} {zone} support device is in place',
               'device tip projects over the {side} {zone} chest'),
}

PREFIX_HEDGES = ('likely', 'possibly')
SUFFIX_HEDGES = ('cannot be excluded',)

PAD_TOKEN = '<pad>'
UNKNOWN_TOKEN = '<unk>'


class Finding(Record):
    """ One abnormality: its kind, location, severity and exact centre. """

    kind = Field()
    side = Field()
    zone = Field()
    severity = Field(default='moderate')
    center = Field(default=(0.0, 0.0))

    def validate(self):
        assert self.kind in KINDS, 'unknown kind {!r}'.format(self.kind)
        assert self.side in SIDES, 'unknown side {!r}'.format(self.side)
        assert self.zone in ZONES, 'unknown zone {!r}'.format(self.zone)
        assert self.severity in SEVERITIES, \
            'unknown severity {!r}'.format(self.severity)
        assert self.kind != 'effusion' or self.zone == 'lower', \
            'effusions are always lower'

    @property
    def location(self):
        return self.side, self.zone

    @property
    def level(self):
        """ 0, 1 or 2 for mild, moderate and severe. """
        return SEVERITIES.index(self.severity)


class SceneSpec(Record):
    """ Everything needed to draw one image except its noise. """

    size = Field(default=32, kind=int)
    noise_sigma = Field(default=0.05, kind=float)
    background = Field(default=0.2, kind=float)
    finding_gain = Field(default=1.0, kind=float)
    blobs = Field(default=[])
    findings = Field(default=[])

    def validate(self):
        assert self.size > 0, 'size must be positive'
        assert len(self.blobs) <= 3, 'at most 3 normal structures'
        assert len(self.findings) <= 3, 'at most 3 findings'
        seen = set()
        for finding in self.findings:
            key = (finding.kind,) + finding.location
            assert key not in seen, \
                'repeated {} at the same location'.format(finding.kind)
            seen.add(key)

    @property
    def abnormal(self):
        return bool(self.findings)


class DataConfig(Record):
    """ Parameters of the synthetic corpus.

    ``noise_sigma``, ``background`` and ``finding_gain`` change the look of
    the images without changing their content, which is how a second,
    shifted corpus stands in for an external dataset.
    """

    image_size = Field(default=32, kind=int)
    noise_sigma = Field(default=0.05, kind=float)
    background = Field(default=0.2, kind=float)
    finding_gain = Field(default=1.0, kind=float)
    abnormal_rate = Field(default=0.5, kind=float)
    omission = Field(default=0.05, kind=float)
    hedge_rate = Field(default=0.3, kind=float)
    boilerplate = Field(default=3, kind=int)

    def validate(self):
        assert self.image_size >= 8, 'image_size must be at least 8'
        assert self.noise_sigma >= 0, 'noise_sigma must not be negative'
        assert 0 <= self.background <= 1, 'background must be in [0, 1]'
        assert self.finding_gain > 0, 'finding_gain must be positive'
        for name in ('abnormal_rate', 'omission', 'hedge_rate'):
            assert 0 <= getattr(self, name) <= 1, \
                '{} must be in [0, 1]'.format(name)
        assert 0 <= self.boilerplate <= len(BOILERPLATE), \
            'boilerplate must be in 0..{}'.format(len(BOILERPLATE))


def _locations(kind):
    zones = ('lower',) if kind == 'effusion' else ZONES
    return [(kind, side, zone) for side in SIDES for zone in zones]


CANDIDATES = [c for kind in KINDS for c in _locations(kind)]


def sample_scene(rng, config):
    """ Draw a `SceneSpec`; abnormal with probability ``abnormal_rate``. """
    size = config.image_size
    findings = []
    if rng.random() < config.abnormal_rate:
        count = int(rng.integers(1, 4))
        for c in sorted(rng.choice(len(CANDIDATES), size=count, replace=False)):
            kind, side, zone = CANDIDATES[c]
            cy = (0.25 if zone == 'upper' else 0.75) * size
            cx = (0.25 if side == 'left' else 0.75) * size
            jitter = rng.uniform(-size / 16.0, size / 16.0, size=2)
            findings.append(Finding(
                kind=kind, side=side, zone=zone,
                severity=SEVERITIES[int(rng.integers(3))],
                center=(float(cy + jitter[0]), float(cx + jitter[1]))))
    blobs = []
    for _ in range(int(rng.integers(0, 4))):
        cy, cx = rng.uniform(0.2, 0.8, size=2) * size
        blobs.append((float(cy), float(cx),
                      float(rng.uniform(1.5, 3.0) * size / 32.0),
                      float(rng.uniform(0.05, 0.15))))
    return SceneSpec(size=size, noise_sigma=config.noise_sigma,
                     background=config.background,
                     finding_gain=config.finding_gain, blobs=blobs,
                     findings=findings)


def quantize(pixels):
    """ Clip to [0, 1] and round to multiples of 1/255. """
    return np.round(np.clip(pixels, 0.0, 1.0) * 255.0) / 255.0


def _segment_distance(yy, xx, start, end):
    (y0, x0), (y1, x1) = start, end
    dy, dx = y1 - y0, x1 - x0
    t = ((yy - y0) * dy + (xx - x0) * dx) / max(dy * dy + dx * dx, 1e-12)
    t = np.clip(t, 0.0, 1.0)
    return np.hypot(yy - (y0 + t * dy), xx - (x0 + t * dx))


def _draw_finding(finding, yy, xx, size, gain):
    level = finding.level
    cy, cx = finding.center
    if finding.kind == 'opacity':
        radius = (0.08 + 0.06 * level) * size
        amount = np.clip(radius - np.hypot(yy - cy, xx - cx) + 0.5, 0.0, 1.0)
        return gain * (0.35 + 0.15 * level) * amount
    if finding.kind == 'effusion':
        extent = (0.25 + 0.08 * level) * size
        across = xx if finding.side == 'left' else size - xx
        inside = 1.0 - (across + (size - yy)) / extent
        amount = np.clip(inside * extent * 0.5, 0.0, 1.0)
        return gain * (0.3 + 0.15 * level) * amount
    distance = _segment_distance(yy, xx, (0.0, size / 2.0), (cy, cx))
    amount = np.clip(1.0 - distance, 0.0, 1.0)
    return gain * (0.4 + 0.1 * level) * amount


def render_scene(spec, rng):
    """ A 1 x H x W image of *spec*, quantized to 8 bits. """
    size = spec.size
    yy, xx = np.mgrid[0:size, 0:size] + 0.5
    image = np.full((size, size), spec.background)
    for cy, cx, sigma, amp in spec.blobs:
        image += amp * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) /
                              (2 * sigma ** 2))
    for finding in spec.findings:
        image += _draw_finding(finding, yy, xx, size, spec.finding_gain)
    image += rng.normal(0.0, spec.noise_sigma, size=(size, size))
    return quantize(image)[None]


def _finding_sentence(finding, rng, config):
    templates = TEMPLATES[finding.kind]
    sentence = templates[int(rng.integers(len(templates)))].format(
        severity=finding.severity, side=finding.side, zone=finding.zone)
    if rng.random() < config.hedge_rate:
        hedges = PREFIX_HEDGES + SUFFIX_HEDGES
        hedge = hedges[int(rng.integers(len(hedges)))]
        if hedge in PREFIX_HEDGES:
            sentence = '{} {}'.format(hedge, sentence)
        else:
            sentence = '{} {}'.format(sentence, hedge)
    return sentence


def render_report(spec, rng, config):
    """ Boilerplate and finding sentences in random order. """
    picks = rng.choice(len(BOILERPLATE), size=config.boilerplate,
                       replace=False)
    sentences = [BOILERPLATE[p] for p in picks]
    for finding in spec.findings:
        omitted = rng.random() < config.omission
        sentence = _finding_sentence(finding, rng, config)
        if not omitted:
            sentences.append(sentence)
    order = rng.permutation(len(sentences))
    return ' '.join('{}.'.format(sentences[o].capitalize()) for o in order)


def split_words(text):
    """ Lowercase words of *text* with punctuation treated as space. """
    return re.sub(r'[^\w\s]', ' ', text.lower()).split()


class Vocabulary(object):
    """ Token to id map with ``<pad>`` as 0 and ``<unk>`` as 1.

    >>> vocab = Vocabulary.build(['No effusion.', 'Mild effusion'])
    >>> vocab.encode(['effusion', 'pleural'])
    [2, 1]
    """

    def __init__(self, tokens):
        tokens = list(tokens)
        if tokens[:2] != [PAD_TOKEN, UNKNOWN_TOKEN]:
            raise ValueError('vocabulary must start with {} and {}'.format(
                PAD_TOKEN, UNKNOWN_TOKEN))
        if len(set(tokens)) != len(tokens):
            raise ValueError('vocabulary tokens must be unique')
        self.tokens = tokens
        self.ids = dict((token, i) for i, token in enumerate(tokens))

    @classmethod
    def build(cls, texts):
        words = set()
        for text in texts:
            words.update(split_words(text))
        words.discard(PAD_TOKEN)
        words.discard(UNKNOWN_TOKEN)
        return cls([PAD_TOKEN, UNKNOWN_TOKEN] + sorted(words))

    def __len__(self):
        return len(self.tokens)

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    def __ne__(self, other):
        return not self == other

    def encode(self, words):
        return [self.ids.get(w, UNKNOWN) for w in words]

    def save(self, path):
        with open(path, 'w', encoding='utf-8') as fh:
            for i, token in enumerate(self.tokens):
                fh.write('{}\t{}\n'.format(token, i))

    @classmethod
    def load(cls, path):
        tokens = []
        with open(path, encoding='utf-8') as fh:
            for lineno, line in enumerate(fh, 1):
                parts = line.rstrip('\n').split('\t')
                if len(parts) != 2 or tools.int2(parts[1], None) != lineno - 1:
                    raise ValueError('{}:{}: expected token<TAB>{}'.format(
                        path, lineno, lineno - 1))
                tokens.append(parts[0])
        return cls(tokens)


def tokenize(report, vocab, max_len):
    """ Ids of the words of *report*, truncated or right-padded with 0 to
    *max_len*.
    """
    ids = vocab.encode(split_words(report))[:max_len]
    out = np.full(max_len, PAD, dtype=np.int64)
    out[:len(ids)] = ids
    return out


def _tokenize_all(reports, vocab, max_len):
    if not reports:
        return np.zeros((0, max_len), dtype=np.int64)
    return np.stack([tokenize(r, vocab, max_len) for r in reports])


class Corpus(Record):
    """ Paired images and reports with their labels.

    *images* is N x 1 x H x W, *tokens* N x max_len, *labels* the N binary
    labels and *multihot* the N x len(KINDS) finding kinds present.  Labels
    are None for an ingested corpus without a labels file.
    """

    ids = Field(default=[])
    images = Field()
    reports = Field(default=[])
    labels = Field(default=None)
    multihot = Field(default=None)
    vocab = Field()
    tokens = Field()
    seed = Field(default=None)
    config = Field(default=None)
    skipped = Field(default=[])

    def validate(self):
        n = len(self.ids)
        assert len(self.images) == n, 'one image per id'
        assert len(self.reports) == n, 'one report per id'
        assert len(self.tokens) == n, 'one token sequence per id'
        if self.multihot is not None:
            assert len(self.multihot) == n, 'one label per id'

    def __len__(self):
        return len(self.ids)

    @property
    def max_len(self):
        return self.tokens.shape[1]

    def labeled(self, task='binary'):
        """ A `LabeledDataset` of the images and their labels. """
        if self.multihot is None:
            raise ValueError('corpus has no labels')
        if task == 'binary':
            labels = [int(v) for v in self.labels]
        else:
            labels = list(self.multihot)
        return LabeledDataset(LabeledExample(image=img, label=label, task=task)
                              for img, label in zip(self.images, labels))


def generate_corpus(n, seed=0, config=None, max_len=32, vocab=None):
    """ *n* items drawn deterministically from *seed*.

    The vocabulary is built from the reports unless *vocab* is given (a
    held-out corpus uses the vocabulary of its training corpus).
    """
    if n < 2:
        raise ValueError('a corpus needs at least 2 items, got {}'.format(n))
    config = config if config is not None else DataConfig()
    images, reports, multihot = [], [], []
    for i in range(n):
        rng = np.random.default_rng([seed, i])
        spec = sample_scene(rng, config)
        images.append(render_scene(spec, rng))
        reports.append(render_report(spec, rng, config))
        kinds = set(f.kind for f in spec.findings)
        multihot.append([int(k in kinds) for k in KINDS])
    multihot = np.array(multihot, dtype=np.int64)
    vocab = vocab if vocab is not None else Vocabulary.build(reports)
    return Corpus(ids=['{:06d}'.format(i) for i in range(n)],
                  images=np.stack(images), reports=reports,
                  labels=multihot.any(axis=1).astype(np.int64),
                  multihot=multihot, vocab=vocab,
                  tokens=_tokenize_all(reports, vocab, max_len), seed=seed,
                  config=config)


def export_corpus(corpus, out):
    """ Write *corpus* in the directory layout read by `ingest_external`. """
    image_dir = os.path.join(out, 'images')
    os.makedirs(image_dir, exist_ok=True)
    for item_id, image in zip(corpus.ids, corpus.images):
        tools.write_pgm(os.path.join(image_dir, item_id + '.pgm'),
                        tools.gray_levels(image[0]))
    with open(os.path.join(out, 'reports.tsv'), 'w', encoding='utf-8') as fh:
        for item_id, report in zip(corpus.ids, corpus.reports):
            fh.write('{}\t{}\n'.format(item_id, report))
    if corpus.multihot is not None:
        with open(os.path.join(out, 'labels.tsv'), 'w',
                  encoding='utf-8') as fh:
            for item_id, row in zip(corpus.ids, corpus.multihot):
                fh.write('{}\t{}\n'.format(item_id, ','.join(
                    str(k) for k in np.flatnonzero(row))))
    corpus.vocab.save(os.path.join(out, 'vocab.tsv'))
    manifest = collections.OrderedDict([
        ('count', len(corpus)),
        ('abnormal', int(np.sum(corpus.labels))
         if corpus.labels is not None else None),
        ('seed', corpus.seed),
        ('image_size', int(corpus.images.shape[-1])),
        ('max_len', corpus.max_len),
        ('kinds', list(KINDS)),
        ('vocab_size', len(corpus.vocab)),
        ('config', dict(corpus.config.asdict())
         if corpus.config is not None else None),
    ])
    with open(os.path.join(out, 'manifest.json'), 'w') as fh:
        fh.write(simplejson.dumps(manifest, sort_keys=True, indent=4))


def _read_table(path):
    """ id<TAB>text lines as an ordered mapping; errors name the line. """
    table = collections.OrderedDict()
    try:
        fh = open(path, encoding='utf-8')
    except OSError as err:
        raise ValueError('{}: cannot read: {}'.format(path, err))
    lineno = 0
    with fh:
        try:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip('\n').rstrip('\r')
                if not line:
                    continue
                item_id, sep, text = line.partition('\t')
                if not sep or not item_id:
                    raise ValueError('{}:{}: expected id<TAB>text'.format(
                        path, lineno))
                if item_id in table:
                    raise ValueError('{}:{}: duplicate id {!r}'.format(
                        path, lineno, item_id))
                table[item_id] = (lineno, text)
        except UnicodeDecodeError as err:
            raise ValueError('{}:{}: not UTF-8: {}'.format(path, lineno + 1,
                                                          err))
    return table


def _parse_kinds(path, lineno, text):
    if not text.strip():
        return []
    kinds = [tools.int2(part.strip(), None) for part in text.split(',')]
    if any(k is None or not 0 <= k < len(KINDS) for k in kinds):
        raise ValueError('{}:{}: expected comma separated class indices in '
                         '0..{}, got {!r}'.format(path, lineno,
                                                  len(KINDS) - 1, text))
    return kinds


def ingest_external(image_dir, reports_file, labels_file=None, vocab=None,
                    max_len=32):
    """ Read a corpus from PGM images and tab separated reports and labels.

    Items are keyed by id and kept in report file order.  Ids lacking an
    image, a report or (when a labels file is given) a label are skipped
    and reported in a single warning.
    """
    reports = _read_table(reports_file)
    labels = _read_table(labels_file) if labels_file is not None else None
    if not os.path.isdir(image_dir):
        raise ValueError('{}: not a directory'.format(image_dir))
    image_ids = set(name[:-4] for name in os.listdir(image_dir)
                    if name.endswith('.pgm'))
    everything = set(reports) | image_ids
    if labels is not None:
        everything |= set(labels)
    ids = [i for i in reports if i in image_ids and
           (labels is None or i in labels)]
    skipped = sorted(everything - set(ids))
    if skipped:
        logging.warning('skipped %d id(s) without a counterpart: %s',
                        len(skipped), ', '.join(skipped))
    images = []
    for item_id in ids:
        pixels = tools.read_pgm(os.path.join(image_dir, item_id + '.pgm'))
        if images and pixels.shape != images[0].shape[1:]:
            raise ValueError('{}.pgm: size {} differs from {}'.format(
                item_id, pixels.shape, images[0].shape[1:]))
        images.append(pixels[None] / 255.0)
    texts = [reports[i][1] for i in ids]
    multihot = binary = None
    if labels is not None:
        multihot = np.zeros((len(ids), len(KINDS)), dtype=np.int64)
        for row, item_id in enumerate(ids):
            lineno, text = labels[item_id]
            multihot[row, _parse_kinds(labels_file, lineno, text)] = 1
        binary = multihot.any(axis=1).astype(np.int64)
    vocab = vocab if vocab is not None else Vocabulary.build(texts)
    return Corpus(ids=ids, images=np.stack(images) if images else
                  np.zeros((0, 1, 0, 0)), reports=texts, labels=binary,
                  multihot=multihot, vocab=vocab,
                  tokens=_tokenize_all(texts, vocab, max_len), skipped=skipped)


def load_corpus(directory, max_len=32):
    """ Ingest a directory written by `export_corpus`, with its vocabulary. """
    labels_file = os.path.join(directory, 'labels.tsv')
    vocab_file = os.path.join(directory, 'vocab.tsv')
    return ingest_external(
        os.path.join(directory, 'images'),
        os.path.join(directory, 'reports.tsv'),
        labels_file if os.path.exists(labels_file) else None,
        vocab=Vocabulary.load(vocab_file) if os.path.exists(vocab_file)
        else None, max_len=max_len)
