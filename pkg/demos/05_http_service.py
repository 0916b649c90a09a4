"""Drive the HTTP service end to end: upload, sequence, inspect templates.

Starts the FastAPI app with an in-process uvicorn server on a free port,
then talks to it with plain stdlib HTTP, exactly as the browser UI does.
"""

import json
import socket
import threading
import time
import urllib.request

import uvicorn

from albumseq import ModelConfig, OrderingModel
from albumseq.ingest import SyntheticSpec, generate_synthetic, save_corpus
from albumseq.service import create_app

cfg = ModelConfig(feature_dim=8, encoder_hidden=16, z_dim=1, d_model=16,
                  n_heads=2, d_ff=32, max_len=8, dropout_rate=0.0)
model = OrderingModel.initialize(cfg, seed=0)
app = create_app(model=model)

with socket.socket() as s:
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error"))
threading.Thread(target=server.run, daemon=True).start()
while not server.started:
    time.sleep(0.02)
base = f"http://127.0.0.1:{port}"
print("service at", base)


def get(path):
    with urllib.request.urlopen(base + path) as r:
        return json.loads(r.read())


def post(path, body, content_type):
    req = urllib.request.Request(base + path, data=body, method="POST",
                                 headers={"content-type": content_type})
    with urllib.request.urlopen(req) as r:
        return json.loads(r.read())


print("healthz:", get("/healthz"))

corpus = generate_synthetic(SyntheticSpec(seed=3, n_albums=2, m_range=(5, 5), dimension=8))
save_corpus(corpus, "/tmp/albumseq_upload.csv")
with open("/tmp/albumseq_upload.csv", "rb") as fh:
    session = post("/api/albums", fh.read(), "text/csv")
print("uploaded albums:", [a["album_id"] for a in session["albums"]])

req = {"session_id": session["session_id"],
       "album_id": session["albums"][0]["album_id"],
       "method": "template", "template_name": "arch"}
result = post("/api/sequence", json.dumps(req).encode(), "application/json")
order = result["orders"][0]
print("arch-template order:", order["track_ids"])
print("narrative values:   ", order["narrative_values"])

req = {**req, "method": "direct", "n": 3, "seed": 0}
req.pop("template_name")
result = post("/api/sequence", json.dumps(req).encode(), "application/json")
print("direct top-3 log-likelihoods:", [round(o["log_likelihood"], 3) for o in result["orders"]])

names = [t["name"] for t in get("/api/templates")["templates"]]
print("built-in templates:", names)

server.should_exit = True
