"""The geometry kernel on its own: buffer, centroid, envelope, area.

No services involved — this is the pure-computation layer the mock WPS runs
behind its Execute operation.  Buffers use inscribed polygon caps, so their
areas have closed forms we can check by hand.
"""

import math

from geobind.gml import LineString, Point, Polygon
from geobind.kernel import area, buffer, centroid, envelope

K = 16  # segments per half-circle cap; a point's buffer is a 2K-gon


def main():
    # a unit disk, as the buffer of a single point: an inscribed 32-gon,
    # whose exact area is (32/2) * sin(2*pi/32) = K * sin(pi/K)
    disk = buffer(Point(0.0, 0.0), 1.0, k=K)
    inscribed = K * math.sin(math.pi / K)
    print(f"disk via buffer(point):   area {area(disk):.12f}")
    print(f"inscribed 32-gon formula: area {inscribed:.12f}")
    print(f"pi, for comparison:            {math.pi:.12f}")

    # a capsule: rectangle plus two half-disk caps
    segment = LineString(((0.0, 0.0), (10.0, 0.0)))
    capsule = buffer(segment, 1.0, k=K)
    print(f"\ncapsule around 10-unit segment: area {area(capsule):.6f}")
    print(f"rectangle 20 + disk {inscribed:.6f}  = {20 + inscribed:.6f}")

    # buffers of polylines with corners union the per-segment capsules
    zigzag = LineString(((0.0, 0.0), (4.0, 0.0), (4.0, 3.0), (8.0, 3.0)))
    fat = buffer(zigzag, 0.75)
    print(f"\nzigzag buffer: {len(list(fat.rings()))} ring(s), area {area(fat):.3f}")

    # the other two measures
    print(f"\ncentroid of the zigzag: {centroid(zigzag)}")
    box = envelope(zigzag)
    assert isinstance(box, Polygon)
    print(f"envelope corners:       {list(box.rings())[0][:4]}")

    # a buffer big enough to swallow the concavity has one ring;
    # growing and measuring shows the area is monotone in the distance
    print("\ndistance -> area:")
    for distance in (0.1, 0.5, 1.0, 2.0, 4.0):
        print(f"  {distance:>4} -> {area(buffer(zigzag, distance)):8.3f}")


if __name__ == "__main__":
    main()
