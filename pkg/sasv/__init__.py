# Copyright (c) 2022,2026 SASV Developers.
# Distributed under the terms of the BSD 2-Clause License.
# SPDX-License-Identifier: BSD-2-Clause
"""A python package for spoofing-aware speaker verification experiments.

A spoofing-aware speaker verification (SASV) system answers with a single
score whether a test utterance comes from the enrolled speaker *and* is
genuine speech.  Zero-effort impostors (other bonafide speakers) and
spoofed speech (text-to-speech or voice conversion attacks) are both
negatives.

This package trains a desk-scale SASV model on a
synthetic dataset shaped like the ASVspoof 2019 LA corpus: a fused
encoder feeds a countermeasure classifier, a bonafide-masked AAM-softmax
speaker classifier, two adversarial spoof-source classifiers behind a
gradient reversal layer, and a spoof-source triplet loss.  It evaluates
the SASV-EER, SV-EER and SPF-EER metrics of the SASV challenge and the
score-sum fusion baseline.

The ASVspoof 2019 LA CM protocol files use one line per utterance:
    <speaker> <utterance> - <system or -> <bonafide|spoof>
and are read and written by the sasv.Protocol module.
"""

__author__ = "SASV Developers"

__email__ = "sasv-dev@users.noreply.github.com"

__version__ = "0.1.0"

__doc__ = """sasv v%s (c) 2026, %s

sasv trains and evaluates spoofing-aware speaker verification models.

Please e-mail bug reports to: %s""" % (
    __version__,
    __author__,
    __email__,
)

__LICENSE__ = (
    """
Copyright (c) 2026, %s
All rights reserved.

Redistribution and use in source and binary forms, with or without
modification, are permitted provided that the following conditions are met:

Redistributions of source code must retain the above copyright notice,
this list of conditions and the following disclaimer.

THIS SOFTWARE IS PROVIDED BY THE COPYRIGHT HOLDERS AND CONTRIBUTORS
"AS IS" AND ANY EXPRESS OR IMPLIED WARRANTIES, INCLUDING, BUT NOT LIMITED TO,
THE IMPLIED WARRANTIES OF MERCHANTABILITY AND FITNESS FOR A PARTICULAR
PURPOSE ARE DISCLAIMED. IN NO EVENT SHALL THE COPYRIGHT OWNER OR CONTRIBUTORS
BE LIABLE FOR ANY DIRECT, INDIRECT, INCIDENTAL, SPECIAL, EXEMPLARY, OR
CONSEQUENTIAL DAMAGES (INCLUDING, BUT NOT LIMITED TO, PROCUREMENT OF
SUBSTITUTE GOODS OR SERVICES; LOSS OF USE, DATA, OR PROFITS; OR BUSINESS
INTERRUPTION) HOWEVER CAUSED AND ON ANY THEORY OF LIABILITY, WHETHER IN
CONTRACT, STRICT LIABILITY, OR TORT (INCLUDING NEGLIGENCE OR OTHERWISE)
ARISING IN ANY WAY OUT OF THE USE OF THIS SOFTWARE, EVEN IF ADVISED OF THE
POSSIBILITY OF SUCH DAMAGE.
"""
    % __author__
)
