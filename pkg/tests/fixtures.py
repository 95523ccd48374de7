"""Named matrices used across the suite."""
import numpy as np

SQRT5 = np.sqrt(5.0)
W = np.exp(2j * np.pi / 3)

# distances from the origin to the three sites are all 1
cube_roots = np.diag([1.0, W, np.conj(W)]).astype(np.complex128)

# s_3 = s_2 = sqrt(5)/4 at the origin
conic_double_point = np.array([[0.75, 1, 1], [0, 1.25, 1], [0, 0, -0.75]], dtype=np.complex128)

# blocks [3] and [[-1, 1], [0, 1]]; faults on 31x^2 - y^2 - 90x + 55 = 0, x > 1
hyperbola_fault = np.array([[3, 0, 0], [0, -1, 1], [0, 0, 1]], dtype=np.complex128)
HYPERBOLA_STATIONARY_DELTA = np.sqrt((3 - SQRT5) / 2)
HYPERBOLA_TOUCH_DELTA = (48 - 8 * SQRT5) / 31
HYPERBOLA_TOUCH_POINT = (45 + 8 * SQRT5) / 31

# faults on Re = +-Im
crossing_lines = np.array([[-1, 1, 0, 0], [0, 1, 0, 0], [0, 0, -1j, 1], [0, 0, 0, 1j]],
                          dtype=np.complex128)

ESSENTIAL_DELTA = SQRT5 / 4


def essential_family(k: int) -> np.ndarray:
    """a = conj(c) = (3/4) e^{i k pi/4} on the diagonal corners, 5/4 in the middle."""
    return essential_angle(k * np.pi / 4)


def essential_angle(theta: float) -> np.ndarray:
    a = 0.75 * np.exp(1j * theta)
    return np.array([[a, 1, 1], [0, 1.25, 1], [0, 0, np.conj(a)]], dtype=np.complex128)


def random_matrix(rng, n, scale=1.0):
    return scale * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))


def random_diagonal(rng, n):
    return np.diag(rng.uniform(-2, 2, n) + 1j * rng.uniform(-2, 2, n))


NAMED = {
    "cube_roots": cube_roots,
    "conic_double_point": conic_double_point,
    "hyperbola_fault": hyperbola_fault,
    "crossing_lines": crossing_lines,
    "essential_family_1": essential_family(1),
}
