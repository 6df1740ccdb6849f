#!/usr/bin/env python3
"""Writes the shipped hand configs under data/hands/.

Surface samples are generated here once and stored in the config, so the
C++ side never samples primitives itself. Samples land on a primitive
boundary and are dropped when they fall inside another primitive of the
same link.

    python3 tools/author_hands.py [--spacing 0.006] [--out data/hands]
"""

import argparse
import math
import os

GOLDEN = math.pi * (3.0 - math.sqrt(5.0))


def sub(a, b):
    return [a[i] - b[i] for i in range(3)]


def add(a, b):
    return [a[i] + b[i] for i in range(3)]


def scale(a, s):
    return [a[i] * s for i in range(3)]


def dot(a, b):
    return sum(a[i] * b[i] for i in range(3))


def norm(a):
    return math.sqrt(dot(a, a))


def cross(a, b):
    return [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]


def basis(axis):
    helper = [1.0, 0.0, 0.0] if abs(axis[0]) < 0.9 else [0.0, 1.0, 0.0]
    u = cross(axis, helper)
    u = scale(u, 1.0 / norm(u))
    v = cross(axis, u)
    return u, v


def core_distance(prim, p):
    kind, a, b, r = prim
    if kind == "sphere":
        return norm(sub(p, a))
    ab = sub(b, a)
    t = max(0.0, min(1.0, dot(sub(p, a), ab) / dot(ab, ab)))
    return norm(sub(p, add(a, scale(ab, t))))


def fibonacci_sphere(count):
    pts = []
    for i in range(count):
        z = 1.0 - 2.0 * (i + 0.5) / count
        rho = math.sqrt(max(0.0, 1.0 - z * z))
        phi = i * GOLDEN
        pts.append([rho * math.cos(phi), rho * math.sin(phi), z])
    return pts


def sample_primitive(prim, spacing):
    kind, a, b, r = prim
    out = []
    if kind == "sphere":
        count = max(8, round(4.0 * math.pi * r * r / (spacing * spacing)))
        for d in fibonacci_sphere(count):
            out.append(add(a, scale(d, r)))
        return out
    ab = sub(b, a)
    length = norm(ab)
    axis = scale(ab, 1.0 / length)
    u, v = basis(axis)
    around = max(6, round(2.0 * math.pi * r / spacing))
    rings = max(2, round(length / spacing) + 1)
    for k in range(rings):
        t = length * k / (rings - 1)
        offset = 0.5 * (k % 2)
        for m in range(around):
            ang = 2.0 * math.pi * (m + offset) / around
            d = add(scale(u, math.cos(ang)), scale(v, math.sin(ang)))
            out.append(add(add(a, scale(axis, t)), scale(d, r)))
    cap = max(4, round(2.0 * math.pi * r * r / (spacing * spacing)))
    for end, sign in ((a, -1.0), (b, 1.0)):
        for d in fibonacci_sphere(2 * cap):
            if d[2] <= 0.05:  # the end ring already covers the rim
                continue
            w = add(add(scale(u, d[0]), scale(v, d[1])), scale(axis, sign * d[2]))
            out.append(add(end, scale(w, r)))
    return out


def link_samples(prims, spacing):
    samples = []
    for i, prim in enumerate(prims):
        for p in sample_primitive(prim, spacing):
            inside = any(core_distance(q, p) < q[3] - 1e-4 for j, q in enumerate(prims) if j != i)
            if not inside:
                samples.append(p)
    return samples


def fmt(x):
    s = "%.9f" % x
    return "0.000000000" if s == "-0.000000000" else s


def vec(v):
    return " ".join(fmt(x) for x in v)


def write_hand(path, name, links, joints, spacing, header):
    lines = ["# " + h for h in header] + ["", "hand " + name]
    for lname, tag, prims in links:
        lines.append("")
        lines.append("link %s {" % lname)
        lines.append("  tag " + tag)
        for prim in prims:
            kind, a, b, r = prim
            if kind == "sphere":
                lines.append("  sphere %s %s" % (vec(a), fmt(r)))
            else:
                lines.append("  capsule %s %s %s" % (vec(a), vec(b), fmt(r)))
        for s in link_samples(prims, spacing):
            lines.append("  sample " + vec(s))
        lines.append("}")
    for jname, parent, child, axis, origin, lo, hi, syn in joints:
        lines.append("")
        lines.append("joint %s {" % jname)
        lines.append("  parent " + parent)
        lines.append("  child " + child)
        lines.append("  axis " + vec(axis))
        lines.append("  origin " + vec(origin))
        lines.append("  limits %s %s" % (fmt(lo), fmt(hi)))
        if syn:
            lines.append("  synergy " + fmt(syn))
        lines.append("}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def capsule_z(length, r):
    return ("capsule", [0.0, 0.0, 0.0], [0.0, 0.0, length], r)


def palm(ys, r=0.012, half_width=0.04):
    return [("capsule", [-half_width, y, 0.0], [half_width, y, 0.0], r) for y in ys]


def two_finger():
    links = [
        ("palm", "palm", palm([-0.02, 0.0, 0.02])),
        ("thumb_proximal", "thumb", [capsule_z(0.05, 0.009)]),
        ("thumb_distal", "thumb", [capsule_z(0.035, 0.008)]),
        ("finger_proximal", "other_finger", [capsule_z(0.05, 0.009)]),
        ("finger_distal", "other_finger", [capsule_z(0.035, 0.008)]),
    ]
    joints = [
        ("thumb_base", "palm", "thumb_proximal", [0, 1, 0], [-0.05, 0.0, 0.012], -0.4, 1.3, 1.0),
        ("thumb_tip", "thumb_proximal", "thumb_distal", [0, 1, 0], [0.0, 0.0, 0.05], -0.2, 1.4, 0.6),
        ("finger_base", "palm", "finger_proximal", [0, -1, 0], [0.05, 0.0, 0.012], -0.4, 1.3, 1.0),
        ("finger_tip", "finger_proximal", "finger_distal", [0, -1, 0], [0.0, 0.0, 0.05], -0.2, 1.4, 0.6),
    ]
    return links, joints


def four_finger():
    links = [("palm", "palm", palm([-0.03, -0.01, 0.01, 0.03]))]
    joints = []
    links += [
        ("thumb_l0", "thumb", [capsule_z(0.012, 0.0095)]),
        ("thumb_l1", "thumb", [capsule_z(0.012, 0.0095)]),
        ("thumb_l2", "thumb", [capsule_z(0.04, 0.009)]),
        ("thumb_l3", "thumb", [capsule_z(0.03, 0.008)]),
    ]
    joints += [
        ("thumb_rot", "palm", "thumb_l0", [0, 0, 1], [-0.05, 0.0, 0.012], -0.5, 0.5, 0.0),
        ("thumb_abd", "thumb_l0", "thumb_l1", [1, 0, 0], [0.0, 0.0, 0.012], -0.4, 0.4, 0.0),
        ("thumb_flex1", "thumb_l1", "thumb_l2", [0, 1, 0], [0.0, 0.0, 0.012], -0.4, 1.3, 1.0),
        ("thumb_flex2", "thumb_l2", "thumb_l3", [0, 1, 0], [0.0, 0.0, 0.04], -0.2, 1.4, 0.6),
    ]
    for name, y in (("index", -0.03), ("middle", 0.0), ("ring", 0.03)):
        links += [
            (name + "_l0", "other_finger", [capsule_z(0.012, 0.0095)]),
            (name + "_l1", "other_finger", [capsule_z(0.035, 0.009)]),
            (name + "_l2", "other_finger", [capsule_z(0.025, 0.0085)]),
            (name + "_l3", "other_finger", [capsule_z(0.022, 0.008)]),
        ]
        joints += [
            (name + "_abd", "palm", name + "_l0", [1, 0, 0], [0.05, y, 0.012], -0.3, 0.3, 0.0),
            (name + "_flex1", name + "_l0", name + "_l1", [0, -1, 0], [0.0, 0.0, 0.012], -0.3, 1.4, 1.0),
            (name + "_flex2", name + "_l1", name + "_l2", [0, -1, 0], [0.0, 0.0, 0.035], -0.2, 1.5, 0.7),
            (name + "_flex3", name + "_l2", name + "_l3", [0, -1, 0], [0.0, 0.0, 0.025], -0.2, 1.5, 0.5),
        ]
    return links, joints


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--spacing", type=float, default=0.006)
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data", "hands"))
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    common = [
        "Wrist frame: palm centred at the origin, grasp side +z, thumb on -x.",
        "Generated by tools/author_hands.py (sample spacing %.4f m)." % args.spacing,
    ]
    links, joints = two_finger()
    write_hand(os.path.join(args.out, "two_finger_4dof.hand"), "two_finger_4dof", links, joints, args.spacing,
               ["Two-finger parallel-curl hand, 4 revolute joints."] + common)
    links, joints = four_finger()
    write_hand(os.path.join(args.out, "four_finger_16dof.hand"), "four_finger_16dof", links, joints, args.spacing,
               ["Four-finger hand (thumb + three fingers), 16 revolute joints."] + common)


if __name__ == "__main__":
    main()
