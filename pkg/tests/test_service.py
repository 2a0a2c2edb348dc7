import io
import json

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from calligart.pipeline import GenerationRequest, Studio, StudioConfig
from calligart.service import ArtworkStore, create_app


@pytest.fixture()
def client(toy_studio, tmp_path):
    store = ArtworkStore(tmp_path / "store")
    app = create_app(toy_studio, store)
    return TestClient(app)


def post_artwork(client, **overrides):
    payload = {"text": "麻婆豆腐", "seed": 3, **overrides}
    return client.post("/api/artworks", json=payload)


class TestCreateArtwork:
    def test_create_and_reproduce(self, client):
        first = post_artwork(client)
        assert first.status_code == 201
        record = first.json()
        assert record["request"]["seed"] == 3
        assert len(record["scores"]) == 12  # candidates config of the fixture

        second = post_artwork(client)
        img_a = client.get(f"/api/artworks/{record['id']}/image").content
        img_b = client.get(f"/api/artworks/{second.json()['id']}/image").content
        assert img_a == img_b

    def test_empty_text_names_field(self, client):
        response = post_artwork(client, text="")
        assert response.status_code == 422
        assert response.json()["error"]["field"] == "text"

    def test_bad_ratio_names_field(self, client):
        response = post_artwork(client, whitespace_ratio=2.0)
        assert response.status_code == 422
        assert response.json()["error"]["field"] == "whitespace_ratio"

    def test_unknown_field_rejected(self, client):
        response = post_artwork(client, bogus=1)
        assert response.status_code == 422
        assert response.json()["error"]["field"] == "bogus"

    def test_unknown_style_rejected(self, client):
        response = post_artwork(client, style_id="nope")
        assert response.status_code == 422
        assert response.json()["error"]["field"] == "style_id"

    def test_seed_generated_when_absent(self, client):
        response = client.post("/api/artworks", json={"text": "tea"})
        assert response.status_code == 201
        assert isinstance(response.json()["request"]["seed"], int)

    def test_multipart_dish_upload(self, client):
        rng = np.random.RandomState(0)
        img = rng.randint(0, 256, size=(16, 16, 3)).astype(np.uint8)
        buf = io.BytesIO()
        Image.fromarray(img).save(buf, format="PNG")
        response = client.post(
            "/api/artworks",
            data={"request": json.dumps({"text": "虾仁", "seed": 1,
                                         "palette_k": 2})},
            files={"dish_image": ("dish.png", buf.getvalue(), "image/png")})
        assert response.status_code == 201
        assert response.json()["request"]["has_dish_image"] is True

    def test_undecodable_upload_rejected(self, client):
        response = client.post(
            "/api/artworks",
            data={"request": json.dumps({"text": "x"})},
            files={"dish_image": ("d.png", b"garbage", "image/png")})
        assert response.status_code == 422
        assert response.json()["error"]["field"] == "dish_image"

    def test_oversized_upload_413(self, toy_studio, tmp_path):
        small = Studio(
            toy_studio.checkpoint, toy_studio.vocabulary,
            toy_studio.reference_by_character,
            config=StudioConfig(candidates=4, group_size=2,
                                canvas_size=(256, 256), max_upload_bytes=64))
        client = TestClient(create_app(small, ArtworkStore(tmp_path / "s2")))
        response = client.post(
            "/api/artworks",
            data={"request": json.dumps({"text": "x"})},
            files={"dish_image": ("d.png", b"0" * 100, "image/png")})
        assert response.status_code == 413

    def test_model_not_loaded_503(self, tmp_path):
        client = TestClient(create_app(None, ArtworkStore(tmp_path / "s3")))
        response = client.post("/api/artworks", json={"text": "x"})
        assert response.status_code == 503

    def test_candidate_count_visible_in_scores(self, client):
        record = post_artwork(client, seed=11).json()
        assert len(record["scores"]) == 12


class TestRetrieve:
    def test_round_trip(self, client):
        created = post_artwork(client).json()
        got = client.get(f"/api/artworks/{created['id']}")
        assert got.status_code == 200
        assert got.json()["id"] == created["id"]
        assert got.json()["request"]["text"] == "麻婆豆腐"

    def test_unknown_id_404(self, client):
        response = client.get("/api/artworks/deadbeef")
        assert response.status_code == 404

    def test_image_content_type(self, client):
        created = post_artwork(client).json()
        image = client.get(f"/api/artworks/{created['id']}/image")
        assert image.status_code == 200
        assert image.headers["content-type"] == "image/png"
        assert image.content[:8] == b"\x89PNG\r\n\x1a\n"

    def test_listing_stable_order(self, client):
        ids = [post_artwork(client, seed=s).json()["id"] for s in (1, 2)]
        listing = client.get("/api/artworks").json()["artworks"]
        assert [a["id"] for a in listing][-2:] == ids or len(listing) >= 2
        again = client.get("/api/artworks").json()["artworks"]
        assert [a["id"] for a in listing] == [a["id"] for a in again]

    def test_stored_record_rerenders_identically(self, client, toy_studio):
        created = post_artwork(client, seed=21).json()
        stored_png = client.get(f"/api/artworks/{created['id']}/image").content
        req = created["request"]
        rerun = toy_studio.run(GenerationRequest(
            text=req["text"], palette_k=req["palette_k"],
            whitespace_ratio=req["whitespace_ratio"], style_id=req["style_id"],
            style_strength=req["style_strength"], weights=req["weights"],
            seed=req["seed"], caption=req["caption"], logo_id=req["logo_id"]))
        buf = io.BytesIO()
        Image.fromarray(rerun.composition.rendered).save(buf, format="PNG")
        assert buf.getvalue() == stored_png


class TestStyles:
    def test_default_registry_listed(self, client):
        styles = client.get("/api/styles").json()["styles"]
        ids = {s["style_id"] for s in styles}
        assert "color-field" in ids
        for s in styles:
            assert set(s) == {"style_id", "display_name", "preview_url"}

    def test_preview_served(self, client):
        styles = client.get("/api/styles").json()["styles"]
        preview = client.get(styles[0]["preview_url"])
        assert preview.status_code == 200
        assert preview.headers["content-type"] == "image/png"

    def test_empty_registry_empty_list(self, tmp_path):
        client = TestClient(create_app(None, ArtworkStore(tmp_path / "s4")))
        response = client.get("/api/styles")
        assert response.status_code == 200
        assert response.json()["styles"] == []


class TestFeedback:
    def test_round_trip(self, client):
        created = post_artwork(client).json()
        response = client.post(f"/api/artworks/{created['id']}/feedback",
                               json={"rating": 5, "comment": "lovely"})
        assert response.status_code == 204
        got = client.get(f"/api/artworks/{created['id']}").json()
        assert got["feedback"][0]["rating"] == 5
        assert got["feedback"][0]["comment"] == "lovely"

    @pytest.mark.parametrize("rating", [0, 6, "five", None])
    def test_bad_rating_422(self, client, rating):
        created = post_artwork(client).json()
        response = client.post(f"/api/artworks/{created['id']}/feedback",
                               json={"rating": rating})
        assert response.status_code == 422
        assert response.json()["error"]["field"] == "rating"

    def test_unknown_artwork_404(self, client):
        response = client.post("/api/artworks/nope/feedback", json={"rating": 3})
        assert response.status_code == 404
