import logging
import os

from flask import Flask, jsonify, request
from flask_cors import CORS
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

logging.basicConfig(
    level=os.getenv("RICHELOT_LOG_LEVEL", "INFO"),
    format="%(asctime)s %(name)s %(levelname)s %(message)s",
)

# Import services
from services.errors import RichelotError
from services.verification_service import VerificationService

# Create Flask app
app = Flask(__name__)

# Enable CORS
CORS(app)

# Initialize services
verification_service = VerificationService()

# Bad input rather than a server fault
CLIENT_ERRORS = {cls.__name__ for cls in RichelotError.__subclasses__()}
CLIENT_ERRORS |= {"RichelotError", "KeyError", "ValueError", "TypeError"}


def respond(result):
    """200 on success, 400 for a typed or malformed-input error, 500 otherwise."""
    if result.get("success"):
        return jsonify(result)
    status = 400 if result.get("error_type") in CLIENT_ERRORS else 500
    return jsonify(result), status


def payload():
    return request.get_json(silent=True) or {}


def service_for(data):
    """A per-request service when the body overrides precision, tol or seed."""
    overrides = {k: data[k] for k in ("precision", "tol", "seed", "trials") if k in data}
    if not overrides:
        return verification_service
    return VerificationService(overrides)


# Routes
@app.route('/api/checks', methods=['GET'])
def get_supported_checks():
    """Names of the registered verification checks"""
    try:
        category = request.args.get('category')
        return jsonify({"success": True, "checks": verification_service.get_supported_checks(category)})
    except Exception as e:
        return jsonify({"success": False, "error": str(e), "error_type": type(e).__name__}), 500


@app.route('/api/construct', methods=['POST'])
def construct():
    """Richelot data (C, Cinv, D, A-family, H) of a factorization"""
    try:
        data = payload()
        return respond(service_for(data).construct(data, numeric=bool(data.get("numeric"))))
    except Exception as e:
        return jsonify({"success": False, "error": str(e), "error_type": type(e).__name__}), 500


@app.route('/api/map-point', methods=['POST'])
def map_point():
    """Image of a point of the dual Kummer surface"""
    try:
        data = payload()
        return respond(service_for(data).map_point(data))
    except Exception as e:
        return jsonify({"success": False, "error": str(e), "error_type": type(e).__name__}), 500


@app.route('/api/nodes', methods=['POST'])
def nodes():
    """The 16 labelled nodes"""
    try:
        data = payload()
        return respond(service_for(data).nodes(data, numeric=bool(data.get("numeric"))))
    except Exception as e:
        return jsonify({"success": False, "error": str(e), "error_type": type(e).__name__}), 500


@app.route('/api/tropes', methods=['POST'])
def tropes():
    """The 16 labelled tropes and the incidence matrix"""
    try:
        data = payload()
        return respond(service_for(data).tropes(data, numeric=bool(data.get("numeric"))))
    except Exception as e:
        return jsonify({"success": False, "error": str(e), "error_type": type(e).__name__}), 500


@app.route('/api/decompose', methods=['POST'])
def decompose():
    """The 15 pairings of the roots of f"""
    try:
        data = payload()
        return respond(service_for(data).decompose(data))
    except Exception as e:
        return jsonify({"success": False, "error": str(e), "error_type": type(e).__name__}), 500


@app.route('/api/verify', methods=['POST'])
def verify():
    """Run the exact, numeric or full verification suite"""
    try:
        data = payload()
        result = service_for(data).verify(
            data,
            suite=data.get("suite", "exact"),
            checks=data.get("checks"),
            include_timings=bool(data.get("timings")),
        )
        return respond(result)
    except Exception as e:
        return jsonify({"success": False, "error": str(e), "error_type": type(e).__name__}), 500


if __name__ == '__main__':
    app.run(host='0.0.0.0', port=5000, debug=True)
