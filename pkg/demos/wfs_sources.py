"""Sourcing process inputs from a WFS: filters, and who fetches the data.

A feature service query can reach the process server two ways —

  send the reference:   the WPS dereferences the GetFeature URL itself
  fetch client side:    we run the query, inline the geometry we got

Both roads lead to the same polygon; the demo proves it.
"""

from geobind import client, wfs
from geobind.gml import parse_geometry
from geobind.mock.wfs import wfs_handle
from geobind.mock.wps import WpsService
from geobind.model import FetchMode, InlineLiteral, bind_input, set_fetch_mode
from geobind.transport import InProcessTransport

WPS = "http://127.0.0.1/wps"
WFS = "http://127.0.0.1/wfs"

wps = WpsService(reference_transport=InProcessTransport({WFS: wfs_handle}))
transport = InProcessTransport({WPS: wps.handle, WFS: wfs_handle})


def show_query(label, query):
    collection = wfs.fetch_features(query, transport)
    ids = ", ".join(f.id for f in collection.features) or "(nothing)"
    print(f"  {label:<28} -> {ids}")


def buffered_road(query, mode):
    session = client.describe_and_select(client.open_session(WPS, transport), "Buffer", transport)
    if mode is FetchMode.SEND_REFERENCE:
        session = bind_input(session, "geometry", wfs.as_reference(query))
        session = set_fetch_mode(session, "geometry", mode)
    else:
        # fetch-client-side means the reference never leaves this machine:
        # resolve it here and bind the geometry we got, inline
        session = bind_input(
            session, "geometry", wfs.resolve_reference(query, transport, geometry_only=True)
        )
    session = bind_input(session, "distance", InlineLiteral("1", "double"))
    session, result = client.send_execute(session, transport)
    return parse_geometry(result.outputs[0][1].payload)


def main():
    print("filter families over the sample layer:")
    show_query("everything", wfs.WfsQuery(WFS, "roads"))
    show_query("featureId=road.2", wfs.WfsQuery(WFS, "roads", feature_ids=("road.2",)))
    show_query("name = 'C'", wfs.WfsQuery(WFS, "roads", attribute_filters=(("name", "C"),)))
    show_query("maxFeatures=2", wfs.WfsQuery(WFS, "roads", max_features=2))

    query = wfs.WfsQuery(WFS, "roads", feature_ids=("road.1",))
    print(f"\nGetFeature URL the reference carries:\n  {wfs.build_get_feature_url(query)}")

    sent = buffered_road(query, FetchMode.SEND_REFERENCE)
    fetched = buffered_road(query, FetchMode.FETCH_CLIENT_SIDE)
    print(f"\nserver-fetched buffer: {type(sent).__name__}, {len(list(sent.rings()))} ring(s)")
    print(f"client-fetched buffer: identical vertices -> {sent == fetched}")


if __name__ == "__main__":
    main()
