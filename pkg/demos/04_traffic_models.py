"""
Three multimedia traffic models
===============================

Sample an on-off audio source, an aggregate of eight of them, and the
M/G/infinity video process, and compare each long-run time average with
its closed-form mean. Then look at the diurnal factor across zones.
"""

import numpy as np

from mlwdm.traffic import (
    MgInfParams,
    MmppParams,
    OnOffParams,
    hourly_factor,
    make_rng,
    sample_mginf_path,
    sample_mmpp_path,
    sample_onoff_path,
)

audio = OnOffParams(peak_gbps=0.16, mean_on_s=0.4, mean_off_s=0.6)
aggregate = MmppParams(8, audio)
video = MgInfParams(lambda_per_s=0.5, pareto_alpha=1.5, pareto_xmin_s=1.0, unit_gbps=0.5)

horizon = 1e5
for name, trace, mean in [
    ("on-off", sample_onoff_path(audio, make_rng(1), horizon), audio.p_on * audio.peak_gbps),
    ("MMPP-8", sample_mmpp_path(aggregate, make_rng(2), horizon), 8 * audio.p_on * audio.peak_gbps),
    ("M/G/inf", sample_mginf_path(video, make_rng(3), horizon), 0.5 * video.mean_service_s * 0.5),
]:
    print(f"{name:>8}: {len(trace):7d} rate changes, time average {trace.time_average():.4f}, analytic {mean:.4f}")

# the video trace is bursty at every scale: block means hardly settle
video_trace = sample_mginf_path(video, make_rng(4), horizon)
for block in (10.0, 100.0, 1000.0):
    edges = np.arange(0.0, horizon, block)
    levels = np.array([video_trace.value_at(t) for t in edges])
    print(f"  sampled every {block:6.0f} s: spread {levels.std():.3f}")

print("hour  UTC-5  UTC+0  UTC+9")
for h in range(0, 24, 3):
    print(f"{h:4d}  " + "  ".join(f"{hourly_factor(h, tz):.3f}" for tz in (-5, 0, 9)))
