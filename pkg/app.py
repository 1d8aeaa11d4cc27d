import os
from flask import Flask
from flask_restful import Api
from flask_cors import CORS
from dotenv import load_dotenv

from utils import configure_logging
from resources.frameResource import FrameResource
from resources.filterbankResource import FilterbankResource

# Load environment variables
load_dotenv()
configure_logging(os.environ.get("LOG_LEVEL", "INFO"))

# Initialize Flask app
app = Flask(__name__)
api = Api(app)

# Pipeline inputs
app.config["KNN_MODEL_PATH"] = os.environ.get("KNN_MODEL_PATH")
app.config["AMFM_CONFIG"] = os.environ.get("AMFM_CONFIG")
app.config["MAX_CONTENT_LENGTH"] = int(os.environ.get("MAX_UPLOAD_MB", 32)) * 1024 * 1024

CORS(app, resources={r"/*": {"origins": "*"}})

# Detection routes
api.add_resource(FrameResource, "/frames")

# Filterbank routes
api.add_resource(FilterbankResource, "/filterbank", "/filterbank/<int:index>")

# Run the server
if __name__ == '__main__':
    port = int(os.environ.get("PORT", 5555))
    app.run(host="0.0.0.0", port=port, debug=os.environ.get("FLASK_DEBUG") == "1")
