"""The full client arc: discover a service, pick a process, bind, execute.

Runs entirely in this process against the bundled mock services, so there is
nothing to install or start first:

    python3 demos/discover_describe_execute.py
"""

from geobind import client
from geobind.gml import parse_geometry, serialize_geometry
from geobind.kernel import area
from geobind.mock.wfs import default_dataset, wfs_handle
from geobind.mock.wps import WpsService
from geobind.model import InlineComplex, InlineLiteral, bind_input, validate_bindings
from geobind.transport import InProcessTransport

WPS = "http://127.0.0.1/wps"
WFS = "http://127.0.0.1/wfs"

# one Transport that routes both service URLs to in-process handlers; the
# WPS gets its own route table so it can dereference inputs hosted on the WFS
wps = WpsService(reference_transport=InProcessTransport({WFS: wfs_handle}))
transport = InProcessTransport({WPS: wps.handle, WFS: wfs_handle})


def main():
    # --- discovery: what does this endpoint offer? ---
    session = client.open_session(WPS, transport)
    print(f"service '{session.endpoint.title}' advertises {len(session.processes)} processes:")
    for brief in session.processes:
        print(f"  {brief.identifier:<10} {brief.title}")

    # --- description: what does Buffer need? ---
    session = client.describe_and_select(session, "Buffer", transport)
    print("\nBuffer wants:")
    for descriptor in session.selected.inputs:
        print(f"  {descriptor.identifier:<10} {descriptor.kind.value}")

    # --- binding: a road from the sample dataset, plus a distance ---
    road = default_dataset().features[0]
    session = bind_input(
        session, "geometry", InlineComplex(serialize_geometry(road.geometry), "text/xml")
    )
    session = bind_input(session, "distance", InlineLiteral("1.5", "double"))
    print(f"\nbound {road.id}, distance 1.5 -> violations: {validate_bindings(session) or 'none'}")
    print(f"session stage is now {session.stage.value}")

    # --- execution ---
    session, result = client.send_execute(session, transport)
    output_id, envelope = result.outputs[0]
    polygon = parse_geometry(envelope.payload)
    print(f"\nexecute -> {result.status}; output '{output_id}' is a {type(polygon).__name__}")
    print(f"buffer area {area(polygon):.3f} around a road of length 10")


if __name__ == "__main__":
    main()
