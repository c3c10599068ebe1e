#!/usr/bin/env python3
class Acer_Exception(Exception):
    """ Class to define an ACER harness exception object

    Attributes:
        type (str): Error code type.
        data (dict): Details attached to the error.
        message (str): Human readable error message.

    """
    def __init__(self, response):
        """
        Args:
            response (dict): Dictionary with "errorcode" and optional "data".

        """
        self.type = response["errorcode"]
        self.data = response.get("data", {})
        data = self.data
        if self.type == "Invalid config":
            self.message = "Error: \"" + self.type + "\"\tField: \"" + data["field"] + "\"\tMessage: \"" + data["message"] + "\""
        elif self.type == "Invalid mdp":
            self.message = "Error: \"" + self.type + "\"\tViolations: \"" + "; ".join(data["violations"]) + "\""
        elif self.type == "Dimension mismatch":
            self.message = "Error: \"" + self.type + "\"\texpected: \"" + str(data["expected"]) + "\"\treceived: \"" + str(data["received"]) + "\""
        elif self.type == "Singular system":
            self.message = "Error: \"" + self.type + "\"\tIn: \"" + data["what"] + "\"\tvalue: \"" + str(data["value"]) + "\""
        elif self.type == "Non-finite value":
            self.message = "Error: \"" + self.type + "\"\tIn: \"" + data["what"] + "\"\tstep: \"" + str(data.get("step")) + "\""
        elif self.type == "Unknown oracle kind":
            self.message = "Error: \"" + self.type + "\"\tkind: \"" + str(data["kind"]) + "\""
        elif self.type == "Malformed checkpoint":
            self.message = "Error: \"" + self.type + "\"\tPath: \"" + str(data["path"]) + "\"\tMissing or bad key: \"" + str(data["key"]) + "\""
        elif self.type == "Unreadable file":
            self.message = "Error: \"" + self.type + "\"\tPath: \"" + str(data["path"]) + "\"\tMessage: \"" + str(data["message"]) + "\""
        elif self.type == "No traces":
            self.message = "Error: \"" + self.type + "\"\tNothing to summarize"
        elif self.type == "Empty window":
            self.message = "Error: \"" + self.type + "\"\tFewer than two oracle snapshots in [T/2, T) for T = " + str(data["T"])
        elif self.type == "Mismatch not tracked":
            self.message = "Error: \"" + self.type + "\"\tRun the trace with track_mismatch enabled"
        elif self.type == "Nonpositive value":
            self.message = "Error: \"" + self.type + "\"\tCannot take the log of: \"" + str(data["value"]) + "\""
        elif self.type == "Inconsistent group":
            self.message = "Error: \"" + self.type + "\"\tGroup: \"" + str(data["key"]) + "\"\tdiffers in: \"" + data["field"] + "\""
        elif self.type == "Too few points":
            self.message = "Error: \"" + self.type + "\"\tA rate fit needs at least three distinct T, got: \"" + str(data["n"]) + "\""
        elif self.type == "Degenerate distribution":
            self.message = "Error: \"" + self.type + "\"\tAll-zero row at: \"" + str(data["where"]) + "\""
        elif self.type == "Infeasible floor":
            self.message = "Error: \"" + self.type + "\"\tfloor: \"" + str(data["floor"]) + "\"\tmust lie in [0, 1/" + str(data["n_states"]) + "]"
        else:
            self.message = "Undocumented error: " + str(response)
        super().__init__(self.message)
