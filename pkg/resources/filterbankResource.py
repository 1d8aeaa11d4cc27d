from flask import current_app
from flask_restful import Resource

from .frameResource import pipeline


class FilterbankResource(Resource):
    def get(self, index=None):
        try:
            bank = pipeline()["bank"]
        except ValueError as e:
            current_app.logger.error(f"Pipeline unavailable: {e}")
            return {"error": str(e)}, 503

        if index is not None:
            if not 0 <= index < len(bank):
                return {"error": "Filter not found"}, 404
            return {"index": index, **bank[index].to_dict()}, 200

        return {
            "groups": bank.group_sizes(),
            "filters": [{"index": i, **f.to_dict()} for i, f in enumerate(bank)],
        }, 200
