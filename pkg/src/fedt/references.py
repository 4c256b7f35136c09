"""Published reference results for the public datasets.

Commands that run on SisFall/MMsys/MobiAct print their numbers next to these
targets and the deltas. Segmentation counts depend on the sliding-window
stride, which the published preprocessing leaves open, so they are
comparison targets rather than exact contracts.
"""

# dataset -> (fall windows, adl windows)
SEGMENT_COUNTS = {
    "sisfall": (1798, 52066),
    "mmsys": (416, 43866),
    "mobiact": (767, 50857),
    "practical": (252, 27452),
}

# dataset -> {metric: fraction}
CV_METRICS = {
    "sisfall": {"sensitivity": 0.9811, "specificity": 0.9998, "precision": 0.9966, "f1": 0.9887},
    "mmsys": {"sensitivity": 0.9733, "specificity": 0.9997, "precision": 0.9738, "f1": 0.9727},
    "mobiact": {"sensitivity": 0.9805, "specificity": 0.9995, "precision": 0.9974, "f1": 0.9887},
    "practical": {"sensitivity": 0.9525, "specificity": 0.9998, "precision": 0.9846, "f1": 0.9678},
}

# dataset -> {metric: fraction} with the 95%-variance projection applied
PCA_METRICS = {
    "sisfall": {"sensitivity": 0.7330, "specificity": 0.9984, "precision": 0.9415, "f1": 0.8231},
    "mmsys": {"sensitivity": 0.6561, "specificity": 0.9995, "precision": 0.9277, "f1": 0.7649},
}

# cross-device robustness sensitivity target (train on watch, test on phone)
ROBUSTNESS_SENSITIVITY = 0.93
