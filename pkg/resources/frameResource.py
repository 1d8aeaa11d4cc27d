from flask import current_app, request
from flask_restful import Resource

from models.baseModel import ModelFileError, PnmError
from models.configModel import load_config
from services import attention, detect, gaborbank, imgcore


def pipeline():
    """Config, filterbank and KNN model for the configured paths, loaded once per app."""
    key = (current_app.config.get("KNN_MODEL_PATH"), current_app.config.get("AMFM_CONFIG"))
    state = current_app.extensions.get("attention")
    if state is None or state["key"] != key:
        model_path, config_path = key
        cfg = load_config(config_path)
        state = {
            "key": key,
            "cfg": cfg,
            "bank": gaborbank.build_filterbank(cfg.filter_params),
            "model": detect.load_knn(model_path) if model_path else None,
        }
        current_app.extensions["attention"] = state
    return state


class FrameResource(Resource):
    def post(self):
        upload = request.files.get("frame")
        if upload is None:
            return {"error": "A 'frame' file is required"}, 400

        try:
            state = pipeline()
        except ModelFileError as e:
            current_app.logger.error(f"Cannot load KNN model: {e}")
            return {"error": f"Model unavailable: {e}"}, 503
        except ValueError as e:
            current_app.logger.error(f"Bad pipeline configuration: {e}")
            return {"error": str(e)}, 500
        if state["model"] is None:
            return {"error": "No KNN model configured"}, 503

        name = upload.filename or "frame"
        try:
            img = imgcore.decode_image(upload.read(), name)
        except PnmError as e:
            return {"error": str(e)}, 400

        cfg = state["cfg"]
        report = attention.analyze_frame(img, state["model"], cfg, state["bank"], frame_id=name, threads=cfg.threads)
        current_app.logger.info(f"{name}: {len(report.detections)} detection(s)")
        return report.to_dict(), 200
