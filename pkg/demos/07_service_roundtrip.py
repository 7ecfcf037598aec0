"""The interactive loop the slider UI runs on, without a browser.

Starts the HTTP service on an ephemeral port, uploads an image at a few
strengths, and shows that responses are deterministic and byte-identical
to calling the library directly.  Run demo 04 first for the checkpoint.
"""

import os
import threading
import urllib.request

import styletune as st
from styletune.infer import model_metadata, stylize_png_bytes
from styletune.service import ServiceState, create_server

OUT = os.path.join(os.path.dirname(__file__), "out")
ckpt = os.path.join(OUT, "demo_model.ckpt")
if not os.path.exists(ckpt):
    raise SystemExit("run 04_train_strength_conditioned.py first")

weights = st.load_transformer(ckpt)
state = ServiceState(
    weights=weights, image_size=48,
    metadata=model_metadata(weights, ckpt, 48),
)
server = create_server(state, host="127.0.0.1", port=0)
threading.Thread(target=server.serve_forever, daemon=True).start()
base = f"http://127.0.0.1:{server.server_address[1]}"
print(f"service up at {base}")

with urllib.request.urlopen(f"{base}/api/health") as resp:
    print("GET /api/health ->", resp.read().decode())
with urllib.request.urlopen(f"{base}/api/model") as resp:
    print("GET /api/model  ->", resp.read().decode())

body = open(os.path.join(OUT, "data", "content.png"), "rb").read()
for alpha in (0.0, 1.0, 7.5):
    req = urllib.request.Request(f"{base}/api/stylize?alpha={alpha}", data=body, method="POST")
    with urllib.request.urlopen(req) as resp:
        png = resp.read()
        echoed = resp.headers["X-Alpha"]
    direct = stylize_png_bytes(weights, body, alpha, 48)
    print(f"POST /api/stylize?alpha={alpha}: {len(png)} bytes, X-Alpha={echoed}, "
          f"matches direct call: {png == direct}")

req = urllib.request.Request(f"{base}/api/stylize?alpha=15", data=body, method="POST")
with urllib.request.urlopen(req) as resp:
    print("alpha=15 is served but flagged: X-Alpha-Extrapolated =",
          resp.headers.get("X-Alpha-Extrapolated"))

server.shutdown()
print("service stopped")
