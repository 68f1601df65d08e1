"""How a binding session behaves when you hold it wrong.

Sessions are immutable values that move through fixed stages; operations out
of order, unknown inputs, or ill-typed data all raise before anything touches
the network.  This script pokes each guard rail on purpose.
"""

from geobind import wps_codec
from geobind.errors import GeobindError
from geobind.gml import BBox, serialize_geometry
from geobind.mock import fixture_bytes
from geobind.mock.wfs import default_dataset
from geobind.model import (
    InlineBBox,
    InlineComplex,
    InlineLiteral,
    ServiceEndpoint,
    begin_session,
    bind_input,
    build_execute,
    clear_input,
    load_capabilities,
    select_process,
    validate_bindings,
)

WPS = "http://127.0.0.1/wps"


def expect(label, fn):
    try:
        fn()
    except GeobindError as err:
        print(f"  {label:<42} -> {type(err).__name__}: {err}")
    else:
        print(f"  {label:<42} -> (no complaint!?)")


def main():
    description = wps_codec.decode_process_description(fixture_bytes("wps_describe_buffer.xml"))
    road = default_dataset().features[0].geometry
    gml_road = InlineComplex(serialize_geometry(road), "text/xml")

    fresh = begin_session(WPS)
    print(f"a fresh session starts at stage {fresh.stage.value}; guard rails:")
    expect("select before capabilities", lambda: select_process(fresh, description))
    expect("bind before describe", lambda: bind_input(fresh, "geometry", gml_road))
    expect("build before anything", lambda: build_execute(fresh))

    session = select_process(
        load_capabilities(fresh, ServiceEndpoint(WPS), (description.brief,)), description
    )
    print(f"\nprocess selected, stage {session.stage.value}:")
    expect("bind an undeclared input", lambda: bind_input(session, "speed", gml_road))
    expect("bbox where GML is declared", lambda: bind_input(session, "geometry", InlineBBox(BBox(0, 0, 1, 1))))
    expect("a distance that isn't a double", lambda: InlineLiteral("very far", "double"))
    expect("build with nothing bound", lambda: build_execute(session))

    # the verdict is a value, not an exception, when you ask politely
    half_bound = bind_input(session, "distance", InlineLiteral("2", "double"))
    print(f"\nvalidate after binding only distance: {validate_bindings(half_bound)}")

    # rebinding is just clear + bind; the old session values are untouched
    bound = bind_input(half_bound, "geometry", gml_road)
    rebound = bind_input(clear_input(bound, "distance"), "distance", InlineLiteral("3", "double"))
    print(f"\noriginal still holds distance {bound.bindings['distance'][0].value!r}, "
          f"rebound holds {rebound.bindings['distance'][0].value!r}")

    request = build_execute(rebound)
    print(f"\nbuilt Execute for {request.process!r} with outputs {request.outputs}")
    print(f"encoded body is {len(wps_codec.encode_execute(request))} bytes of XML")


if __name__ == "__main__":
    main()
