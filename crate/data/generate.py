#!/usr/bin/env python3
"""Regenerate the bundled sample datasets.

The files produced here are synthetic desk-scale stand-ins for full
radiative-transfer products. The atmosphere follows a Rayleigh + Angstrom
aerosol optical depth with a few water-vapor/oxygen absorption bands and a
plane-parallel secant airmass. The daytime sky radiance is a smooth photon
continuum multiplied by Gaussian Fraunhofer line dips, with the continuum
level near 656.448 nm, 854.445 nm and 1550.027 nm calibrated so that the
detection-window background probabilities land on the reference values in
data/README.md. Detector curves approximate the best commercially available
silicon SPAD, NIR-optimized SNSPD and InGaAs SPAD efficiencies.

Run from the repository root:  python3 data/generate.py
"""

import bisect
import math
import os

HERE = os.path.dirname(os.path.abspath(__file__))

ZENITH_DEG = list(range(-80, 81, 5))

ANCHOR_HA = 656.448
ANCHOR_CA = 854.445
ANCHOR_C = 1550.027

# calibration targets: background click probability in a 1 ns window,
# zenith line of sight, 0.5 nm filter, fov 1e-10 sr, 0.5 m aperture
P_BG_TARGETS = {ANCHOR_HA: 1.77e-4, ANCHOR_CA: 4.29e-5, ANCHOR_C: 3.52e-6}
GAMMA_R = 1e-9 * 1e-10 * 0.5**2

# ---------------------------------------------------------------------------
# detectors
# ---------------------------------------------------------------------------

DETECTORS = {
    "si-spad": {
        "dcr": 100,
        "curve": [
            (400, 0.48), (450, 0.58), (500, 0.66), (550, 0.72), (600, 0.76),
            (650, 0.778), (700, 0.773), (750, 0.71), (800, 0.62), (850, 0.50),
            (900, 0.365), (950, 0.22), (1000, 0.10), (1060, 0.02),
        ],
    },
    "snspd-nir": {
        "dcr": 150,
        "curve": [
            (600, 0.30), (650, 0.455), (700, 0.60), (750, 0.76), (800, 0.875),
            (850, 0.893), (900, 0.906), (950, 0.914), (1000, 0.920),
            (1100, 0.925), (1200, 0.922), (1300, 0.915), (1400, 0.895),
            (1500, 0.865), (1550, 0.857), (1600, 0.846), (1700, 0.826),
        ],
    },
    "ingaas-spad": {
        "dcr": 2000,
        "curve": [
            (900, 0.10), (1000, 0.15), (1100, 0.20), (1200, 0.23),
            (1300, 0.25), (1400, 0.25), (1500, 0.25), (1550, 0.25),
            (1600, 0.24), (1700, 0.22),
        ],
    },
}


def detector_efficiency(name, lam):
    curve = DETECTORS[name]["curve"]
    xs = [x for x, _ in curve]
    if lam < xs[0] or lam > xs[-1]:
        return None
    i = bisect.bisect_right(xs, lam) - 1
    i = min(i, len(xs) - 2)
    x0, y0 = curve[i]
    x1, y1 = curve[i + 1]
    return y0 + (y1 - y0) * (lam - x0) / (x1 - x0)


def best_detector(lam):
    best = None
    for name in DETECTORS:
        eff = detector_efficiency(name, lam)
        if eff is not None and (best is None or eff > best[1]):
            best = (name, eff)
    return best


# ---------------------------------------------------------------------------
# atmosphere
# ---------------------------------------------------------------------------

AEROSOL_BETA = 0.025   # Angstrom turbidity
AEROSOL_ALPHA = 1.3    # Angstrom exponent

# (center nm, sigma nm, peak optical depth): O2 A-band and H2O bands
ABSORPTION_BANDS = [
    (762.0, 4.0, 0.45),
    (940.0, 17.0, 0.65),
    (1130.0, 22.0, 0.90),
    (1380.0, 38.0, 2.60),
]


def optical_depth(lam_nm):
    um = lam_nm / 1000.0
    rayleigh = 0.008569 * um**-4 * (1 + 0.0113 * um**-2 + 0.00013 * um**-4)
    aerosol = AEROSOL_BETA * um**-AEROSOL_ALPHA
    bands = sum(d * math.exp(-((lam_nm - c) ** 2) / (2 * s * s))
                for c, s, d in ABSORPTION_BANDS)
    return rayleigh + aerosol + bands


def atmosphere_grid():
    grid = set(range(400, 1701, 10))
    grid.update([ANCHOR_HA, ANCHOR_CA, ANCHOR_C])
    # extra resolution across the narrow O2 A-band
    grid.update([753.0, 756.0, 759.0, 762.0, 765.0, 768.0, 771.0])
    return sorted(grid)


def write_atmosphere():
    path = os.path.join(HERE, "atmosphere.csv")
    with open(path, "w") as f:
        f.write("# kind: atmosphere\n")
        f.write("# units: transmissivity\n")
        f.write("# provenance: synthetic; Rayleigh + aerosol (beta=%.3f, alpha=%.1f) "
                "+ absorption bands, secant airmass; see data/README.md\n"
                % (AEROSOL_BETA, AEROSOL_ALPHA))
        f.write("wavelength_nm," + ",".join(str(z) for z in ZENITH_DEG) + "\n")
        for lam in atmosphere_grid():
            tau = optical_depth(lam)
            row = [math.exp(-tau / math.cos(math.radians(z))) for z in ZENITH_DEG]
            f.write(f"{lam:g}," + ",".join(f"{v:.9e}" for v in row) + "\n")
    print(f"wrote {path}")


# ---------------------------------------------------------------------------
# solar radiance
# ---------------------------------------------------------------------------

# (center nm, depth, fwhm nm)
FRAUNHOFER_LINES = [
    (486.134, 0.86, 0.35),   # H-beta
    (589.000, 0.88, 0.25),   # Na D
    (656.448, 0.90, 0.50),   # H-alpha
    (854.445, 0.82, 0.45),   # Ca II
]

# continuum anchor points (photons / s m^2 sr nm at zenith line of sight);
# the values at the three reference wavelengths are solved for below
CONTINUUM = [
    (400.0, 1.10e17), (450.0, 1.15e17), (500.0, 1.08e17), (550.0, 9.6e16),
    (600.0, 8.3e16), (ANCHOR_HA, None), (700.0, 5.6e16), (750.0, 4.0e16),
    (800.0, 2.2e16), (ANCHOR_CA, None), (900.0, 8.0e15), (950.0, 6.2e15),
    (1000.0, 4.9e15), (1100.0, 3.0e15), (1200.0, 1.9e15), (1300.0, 1.2e15),
    (1400.0, 7.5e14), (1500.0, 4.4e14), (ANCHOR_C, None), (1600.0, 2.75e14),
    (1700.0, 1.9e14),
]

ANGULAR_EXPONENT = 0.65  # sky brightens toward the horizon ~ airmass^0.65


def solar_grid():
    grid = set(range(400, 1701, 10))
    for center, _, _ in FRAUNHOFER_LINES:
        step = 0.1
        k = -30
        while k <= 30:
            grid.add(round(center + k * step, 3))
            k += 1
    grid.update([ANCHOR_HA, ANCHOR_CA, ANCHOR_C])
    return sorted(grid)


def continuum_at(anchors, lam):
    xs = [x for x, _ in anchors]
    ys = [y for _, y in anchors]
    if lam <= xs[0]:
        return ys[0]
    if lam >= xs[-1]:
        return ys[-1]
    i = bisect.bisect_right(xs, lam) - 1
    t = (lam - xs[i]) / (xs[i + 1] - xs[i])
    return ys[i] + t * (ys[i + 1] - ys[i])


def line_factor(lam):
    f = 1.0
    for center, depth, fwhm in FRAUNHOFER_LINES:
        sigma = fwhm / (2 * math.sqrt(2 * math.log(2)))
        f *= 1.0 - depth * math.exp(-((lam - center) ** 2) / (2 * sigma * sigma))
    return f


def band_integral(xs, ys, a, b):
    """Integral of the piecewise-linear (xs, ys) over [a, b]."""
    def value(x):
        i = min(max(bisect.bisect_right(xs, x) - 1, 0), len(xs) - 2)
        t = (x - xs[i]) / (xs[i + 1] - xs[i])
        return ys[i] + t * (ys[i + 1] - ys[i])

    total = 0.0
    x0, y0 = a, value(a)
    for i, x in enumerate(xs):
        if x <= a:
            continue
        if x >= b:
            break
        total += 0.5 * (y0 + ys[i]) * (x - x0)
        x0, y0 = x, ys[i]
    total += 0.5 * (y0 + value(b)) * (b - x0)
    return total


def solve_continuum():
    """Choose the anchor levels at the reference wavelengths so that the
    p_BG targets are met exactly on the discrete grid."""
    anchors = [(x, y if y is not None else 1e16) for x, y in CONTINUUM]
    grid = solar_grid()

    for target_lam, p_bg in P_BG_TARGETS.items():
        name, eff = best_detector(target_lam)
        dark = DETECTORS[name]["dcr"] * 1e-9
        h_band_target = (p_bg - dark) / (eff * GAMMA_R)

        idx = next(i for i, (x, _) in enumerate(anchors) if x == target_lam)

        def band_for(level):
            trial = list(anchors)
            trial[idx] = (target_lam, level)
            ys = [continuum_at(trial, lam) * line_factor(lam) for lam in grid]
            return band_integral(grid, ys, target_lam - 0.25, target_lam + 0.25)

        # the integral is affine in the anchor level: two evaluations solve it
        b0, b1 = band_for(0.0), band_for(1e16)
        level = (h_band_target - b0) / ((b1 - b0) / 1e16)
        anchors[idx] = (target_lam, level)
        print(f"  continuum({target_lam} nm) = {level:.6e}  "
              f"(detector {name}, eff {eff:.4f}, band target {h_band_target:.4e})")
    return anchors


def write_solar(anchors):
    path = os.path.join(HERE, "solar.csv")
    grid = solar_grid()
    with open(path, "w") as f:
        f.write("# kind: solar\n")
        f.write("# units: photons/s/m^2/sr/nm\n")
        f.write("# provenance: synthetic; smooth continuum with Gaussian Fraunhofer "
                "dips, calibrated at 656.448/854.445/1550.027 nm; see data/README.md\n")
        f.write("# sun: zenith 45 deg, azimuth 0 deg\n")
        f.write("wavelength_nm," + ",".join(str(z) for z in ZENITH_DEG) + "\n")
        for lam in grid:
            zenith_value = continuum_at(anchors, lam) * line_factor(lam)
            row = []
            for z in ZENITH_DEG:
                g = (1.0 / math.cos(math.radians(z))) ** ANGULAR_EXPONENT
                row.append(zenith_value * g)
            f.write(f"{lam:g}," + ",".join(f"{v:.9e}" for v in row) + "\n")
    print(f"wrote {path}")


def write_detectors():
    path = os.path.join(HERE, "detectors.csv")
    names = list(DETECTORS)
    grid = sorted({x for d in DETECTORS.values() for x, _ in d["curve"]})
    with open(path, "w") as f:
        f.write("# kind: detectors\n")
        f.write("# provenance: synthetic best-commercial efficiency curves; "
                "see data/README.md\n")
        f.write("# dcr_cps: " + ", ".join(f"{n}={DETECTORS[n]['dcr']}" for n in names) + "\n")
        f.write("wavelength_nm," + ",".join(names) + "\n")
        for lam in grid:
            cells = []
            for n in names:
                exact = dict(DETECTORS[n]["curve"]).get(lam)
                cells.append("" if exact is None else f"{exact}")
            f.write(f"{lam:g}," + ",".join(cells) + "\n")
    print(f"wrote {path}")


def report(anchors):
    grid = solar_grid()
    ys = [continuum_at(anchors, lam) * line_factor(lam) for lam in grid]
    print("\nverification at zenith, 1 ns window, 0.5 nm filter:")
    for lam in (ANCHOR_HA, ANCHOR_CA, ANCHOR_C):
        name, eff = best_detector(lam)
        band = band_integral(grid, ys, lam - 0.25, lam + 0.25)
        p_bg = eff * GAMMA_R * band + DETECTORS[name]["dcr"] * 1e-9
        # system loss: diffraction + atmosphere + pointing + temporal + detector
        w0, a_s, a_g = 0.05, 0.05, 0.5
        lam_m = lam * 1e-9
        zr = math.pi * w0**2 / lam_m
        w = w0 * math.sqrt(1 + (500e3 / zr) ** 2)
        eta_g = 1 - math.exp(-2 * a_g**2 / w**2)
        eta_pt = math.exp(-((2 * math.pi * a_s / lam_m) ** 2) * 1e-12)
        eta_t = 1 - math.exp(-1.0 / 3.0)
        eta_a = math.exp(-optical_depth(lam))
        eta = eta_g * eta_pt * eta_t * eta_a * eff
        print(f"  {lam:9.3f} nm [{name:11s}]  p_BG = {p_bg:.4e}   "
              f"system loss = {-10 * math.log10(eta):6.2f} dB")


if __name__ == "__main__":
    print("solving continuum anchors:")
    anchors = solve_continuum()
    write_atmosphere()
    write_solar(anchors)
    write_detectors()
    report(anchors)
