"""Reference values for the fusion-weight, target and loss examples."""
import numpy as np

np.set_printoptions(precision=17)


def sig(x):
    return 1.0 / (1.0 + np.exp(-x))


def smax(x):
    e = np.exp(x - x.max())
    return e / e.sum()


print("weights [2,-2]:", sig(np.array([2.0, -2.0])), smax(sig(np.array([2.0, -2.0]))))
t = smax(sig(np.exp(-np.array([0.0, 1.0]) ** 2)))
print("target [0,1]:", t)
aux = np.array([0.5, 2.0])
w = np.array([0.6, 0.4])
t = smax(sig(np.exp(-aux ** 2)))
alw = 0.1 * (w * aux).sum()
reg = 1.0 * ((w - t) ** 2).sum()
print("loss example: targets", t, "alw", alw, "reg", reg, "total", 1.0 + alw + reg)
