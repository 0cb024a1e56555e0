"""Timing features of a two-person conversation, from audio to numbers.

Two speakers take turns over 20 seconds. Each gets a rendered audio track,
the tracks are segmented back into speech and pauses, and the dyad's timing
features are computed from the recovered timelines.

    python demos/chronemics_walkthrough.py
"""

from __future__ import annotations

from affiliation.chronemics import (
    SegmentTimeline, dyad_chronemics, render_timeline, segment_speech, silence_intervals,
)

DURATION = 20.0

# A opens, B answers, A cuts in briefly, then a long shared silence.
speech_a = [(1.0, 4.0), (4.5, 6.0), (9.0, 9.8), (16.0, 18.0)]
speech_b = [(6.5, 8.5), (8.8, 11.0)]

truth_a = SegmentTimeline.from_speech(speech_a, DURATION)
truth_b = SegmentTimeline.from_speech(speech_b, DURATION)

# render to waveforms and recover the segments
tl_a = segment_speech(render_timeline(truth_a))
tl_b = segment_speech(render_timeline(truth_b))

for name, tl in (("A", tl_a), ("B", tl_b)):
    print(f"speaker {name}")
    for seg in tl.segments:
        print(f"  {seg.kind:6s} {seg.start:6.2f} - {seg.end:6.2f}")

print("\nshared silences:")
for lo, hi in silence_intervals(tl_a, tl_b):
    print(f"  {lo:6.2f} - {hi:6.2f}  ({hi - lo:.2f} s)")

(feats_a, _), (feats_b, _) = dyad_chronemics(tl_a, tl_b)
print(f"\n{'feature':28s} {'A':>8s} {'B':>8s}")
for key in feats_a:
    print(f"{key:28s} {float(feats_a[key]):8.2f} {float(feats_b[key]):8.2f}")
